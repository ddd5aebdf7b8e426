import math

import pytest

from pace_router.dist import convolve, total_variation
from pace_router.evaluation import (
    AgreementError,
    WorkloadSpec,
    bench,
    eval_kl,
    make_workload,
    ordered_map,
)
from pace_router.graph import extract_tpaths
from pace_router.router import Engine, RouteResult
from pace_router.synth import SyntheticSpec, generate_synthetic, random_instance, random_queries


def test_generation_is_deterministic():
    spec = SyntheticSpec(trajectories=200)
    g1, t1 = generate_synthetic(spec, 5)
    g2, t2 = generate_synthetic(spec, 5)
    assert t1 == t2 and set(g1.edges) == set(g2.edges)
    _, t3 = generate_synthetic(spec, 6)
    assert t1 != t3


def test_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(dependency=1.5)
    with pytest.raises(ValueError):
        SyntheticSpec(vertices=1)


def _one_route(dependency, stratified, n=1000):
    spec = SyntheticSpec(vertices=8, routes=1, route_len=(2, 2), route_share=1.0,
                         dependency=dependency, congestion=(0.2, 0.2), slowdown=0.5,
                         trajectories=n, stratified=stratified)
    g, trajs = generate_synthetic(spec, 11)
    pg = extract_tpaths(trajs, g, 50)
    (t,) = [t for t in pg.tpaths.values() if len(t.edges) == 2]
    return pg, t


def test_full_dependency_gives_exact_joint():
    pg, t = _one_route(1.0, True)
    lo = tuple(pg.base.weights[e].min for e in t.edges)
    hi = tuple(pg.base.weights[e].max for e in t.edges)
    assert set(t.joint.mass) == {lo, hi}
    assert t.joint.mass[lo] == pytest.approx(0.8)
    assert t.joint.mass[hi] == pytest.approx(0.2)


def test_zero_dependency_is_close_to_independent():
    pg, t = _one_route(0.0, False, n=5000)
    a, b = t.edges
    indep = convolve(pg.base.weights[a], pg.base.weights[b])
    assert total_variation(t.total, indep) < 0.05


def test_random_queries_are_reachable():
    g = random_instance(2)
    qs = random_queries(g, 2, 5)
    assert len(qs) == 5
    for s, d in qs:
        assert s != d


def test_eval_kl_folds_partition_data():
    spec = SyntheticSpec(vertices=10, routes=3, trajectories=500)
    g, trajs = generate_synthetic(spec, 3)
    rep = eval_kl(trajs, g, 20, folds=5)
    assert [f.fold for f in rep.folds] == list(range(5))
    assert all(f.paths > 0 for f in rep.folds)
    lo, hi = rep.ci_pace
    assert lo <= rep.mean_pace <= hi
    assert "mean_pace=" in rep.to_tsv()


def test_eval_kl_single_fold_is_near_zero_for_tpaths():
    spec = SyntheticSpec(vertices=10, routes=3, trajectories=500, walk_len=(1, 1))
    g, trajs = generate_synthetic(spec, 3)
    rep = eval_kl(trajs, g, 5, folds=1)
    # every tested path is itself a T-path trained on the same trajectories
    assert rep.mean_pace == pytest.approx(0, abs=1e-6)


def test_eval_kl_without_tpaths_equals_edge_model():
    spec = SyntheticSpec(vertices=10, routes=3, trajectories=300)
    g, trajs = generate_synthetic(spec, 4)
    rep = eval_kl(trajs, g, 10**6, folds=3)
    # no sub-path reaches tau, and edge weights keep their deterministic fallback
    for f in rep.folds:
        assert f.pace == pytest.approx(f.edge) or (math.isnan(f.pace) and math.isnan(f.edge))


def test_eval_kl_rejects_zero_folds():
    with pytest.raises(ValueError):
        eval_kl([], None, 5, folds=0)


def _engine(seed=1):
    g = random_instance(seed)
    return Engine({"all": g}), g


def test_workload_buckets_and_low_multiplier():
    eng, g = _engine()
    wl = make_workload(g.base, WorkloadSpec(pairs_per_bucket=2), seed=0)
    assert wl and {w.multiplier for w in wl} == {0.5, 0.75, 1.0, 1.25, 1.5}
    rep = bench(eng, [w for w in wl if w.multiplier == 0.5], ["V-BS-1"])
    assert all(s["zero_probability"] == s["queries"] for s in rep.summary())


def test_bench_agrees_across_variants():
    eng, g = _engine(2)
    wl = make_workload(g.base, WorkloadSpec(pairs_per_bucket=1), seed=1)
    rep = bench(eng, wl, ["T-None", "T-B-P", "V-None", "V-BS-1", "V-BS-5"])
    assert len(rep.rows) == 5 * len(wl)
    assert rep.to_tsv().startswith("variant\tbucket")


def test_bench_reports_disagreement(monkeypatch):
    eng, g = _engine(2)
    wl = make_workload(g.base, WorkloadSpec(pairs_per_bucket=1, multipliers=(1.5,)), seed=1)
    real = eng.answer

    def skewed(q, variant="V-BS", **kw):
        r = real(q, variant, **kw)
        if variant == "T-None":
            return RouteResult(r.path, r.probability + 0.1, r.explored)
        return r

    monkeypatch.setattr(eng, "answer", skewed)
    with pytest.raises(AgreementError, match="variants disagree"):
        bench(eng, wl, ["T-None", "V-BS-1"])


def test_ordered_map_keeps_order(monkeypatch):
    monkeypatch.setenv("PACE_WORKERS", "4")
    assert ordered_map(lambda x: x * x, range(20)) == [x * x for x in range(20)]
    monkeypatch.setenv("PACE_WORKERS", "bogus")
    assert ordered_map(str, [1, 2]) == ["1", "2"]

from fractions import Fraction as F

import pytest

from pace_router.dist import CostDistribution
from pace_router.graph import Edge, GraphError, PaceGraph, RoadGraph
from pace_router.heuristics import Heuristic, make_heuristic
from pace_router.oracle import exact_best
from pace_router.router import (
    CandidatePath,
    Engine,
    PeriodSchedule,
    Query,
    dominance_prune,
    max_prob,
    parse_variant,
    route,
    route_naive,
    route_tpaths,
)
from pace_router.synth import random_instance, random_queries
from pace_router.vpaths import build_vpaths

from conftest import D, chain_graph


class _Fixed(Heuristic):
    def __init__(self, table):
        super().__init__("d")
        self.table = table

    def u(self, v, x):
        return self.table.get(x, 1.0 if x > max(self.table) else 0.0)


def test_max_prob_weighs_remaining_budget():
    # spent 10 or 20 so far, budget 30: remaining budgets are 20 and 10
    h = _Fixed({10: 0.5, 20: 0.9})
    got = max_prob(D({10: 0.6, 20: 0.4}), "v", 30, h)
    assert got == pytest.approx(0.6 * 0.9 + 0.4 * 0.5)
    assert max_prob(D({40: 1.0}), "v", 30, h) == 0


def test_max_prob_never_exceeds_one():
    assert max_prob(D({1: 0.3, 2: 0.7}), "v", 50, Heuristic("d")) == 1


def _cand(path, verts, dist):
    return CandidatePath(tuple(path), tuple(verts), dist, 1)


def test_dominance_prune_drops_dominated_newcomer():
    old = _cand(["a"], ["s", "v"], D({20: 1.0}))
    new = _cand(["b"], ["s", "v"], D({20: 0.8, 30: 0.2}))
    assert dominance_prune(new, [old]) == (False, [])


def test_dominance_prune_evicts_dominated_incumbent():
    old = _cand(["b"], ["s", "v"], D({20: 0.8, 30: 0.2}))
    new = _cand(["a"], ["s", "v"], D({20: 1.0}))
    keep, evict = dominance_prune(new, [old])
    assert keep and evict == [old]


def test_dominance_prune_keeps_incomparable_and_equal_incumbent():
    pa = _cand(["a"], ["s", "v"], D({50: 0.8, 60: 0.2}))
    pb = _cand(["b"], ["s", "v"], D({40: 0.5, 50: 0.2, 60: 0.2, 70: 0.1}))
    assert dominance_prune(pb, [pa]) == (True, [])
    twin = _cand(["c"], ["s", "v"], D({50: 0.8, 60: 0.2}))
    assert dominance_prune(twin, [pa]) == (False, [])


def test_dominance_needs_vertex_subset():
    old = _cand(["a", "b"], ["s", "w", "v"], D({20: 1.0}))
    new = _cand(["c", "d"], ["s", "x", "v"], D({20: 0.8, 30: 0.2}))
    assert dominance_prune(new, [old]) == (True, [])


@pytest.mark.parametrize("variant", ["T-None", "T-B-E", "T-B-P", "T-BS-1", "V-None", "V-B-P", "V-BS-1", "V-BS-5"])
def test_two_routes_every_variant_picks_pb(two_routes, variant):
    eng = Engine({"all": two_routes})
    r = eng.answer(Query("office", "airport", 60), variant)
    assert r.path == ("PB",)
    assert r.probability == 1


def test_two_routes_naive_and_oracle(two_routes):
    q = Query("office", "airport", 60)
    assert route_naive(two_routes, q).path == ("PB",)
    res = exact_best(two_routes, q)
    assert res.best_path == ("PB",)
    probs = {p: prob for p, _, prob in res.table}
    assert probs == {("PA",): F(9, 10), ("PB",): 1}


def test_straight_line():
    g = chain_graph(4)
    gp = build_vpaths(g)
    h = make_heuristic(gp, "v4", "table")
    r = route(gp, Query("v0", "v4", 50), h)
    assert r.path == ("e1", "e2", "e3", "e4")
    # the four correlated edges add to 40 with 0.8 and 60 with 0.2
    assert r.probability == pytest.approx(0.8)
    assert len(r.units) == 1


def test_unreachable_and_trivial():
    g = chain_graph(2)
    gp = build_vpaths(g)
    assert route(gp, Query("v2", "v0", 100), Heuristic("v0")).probability == 0
    assert route(gp, Query("v1", "v1", 0), Heuristic("v1")).probability == 1
    assert route(gp, Query("v0", "v2", 5), make_heuristic(gp, "v2", "binary")).path == ()
    with pytest.raises(GraphError):
        route(gp, Query("v0", "nowhere", 5), Heuristic("nowhere"))


def test_negative_budget_rejected():
    with pytest.raises(ValueError):
        Query("a", "b", -1)


def test_vpath_route_explores_less_than_naive():
    less = 0
    total = 0
    for seed in range(20):
        g = random_instance(seed, chain=True)
        gp = build_vpaths(g)
        for s, d in random_queries(g, seed, 2):
            h = make_heuristic(gp, d, "table")
            q = Query(s, d, 60)
            a, b = route(gp, q, h), route_naive(g, q)
            assert a.probability == pytest.approx(b.probability, abs=1e-9)
            total += 1
            less += a.explored <= b.explored
    assert less >= 0.9 * total


def test_tpath_router_matches_oracle_on_chain(overlap_chain):
    h = make_heuristic(overlap_chain, "v5", "binary")
    q = Query("v0", "v5", 55)
    want = exact_best(overlap_chain, q).best_probability
    assert route_tpaths(overlap_chain, q, h).probability == pytest.approx(want)


def test_period_schedule():
    s = PeriodSchedule.parse("peak:0-3600,off:3600-86400")
    assert s.tag(10) == "peak" and s.tag(3600) == "off"
    with pytest.raises(GraphError, match="no graph for period"):
        s.tag(90000)
    assert PeriodSchedule().tag(5) == "all"


def test_engine_picks_period_graph(two_routes):
    slow = PaceGraph(RoadGraph(["office", "airport"], [Edge("PA", "office", "airport")],
                               {"PA": D({100: 1.0})}))
    eng = Engine({"peak": slow, "off": two_routes}, PeriodSchedule.parse("peak:0-10,off:10-20"))
    assert eng.answer(Query("office", "airport", 60, departure=5)).probability == 0
    assert eng.answer(Query("office", "airport", 60, departure=15)).path == ("PB",)
    with pytest.raises(GraphError):
        eng.answer(Query("office", "airport", 60, departure=25))


def test_engine_caches_heuristics(two_routes):
    eng = Engine({"all": two_routes})
    assert eng.heuristic("all", "airport", "table") is eng.heuristic("all", "airport", "table")


@pytest.mark.parametrize("name,want", [
    ("V-BS-5", ("V", "table", 5)),
    ("V-BS", ("V", "table", 1)),
    ("T-B-E", ("T", "binary-E", 1)),
    ("T-B-P", ("T", "binary-P", 1)),
    ("T-None", ("T", "none", 1)),
])
def test_parse_variant(name, want):
    assert parse_variant(name) == want


@pytest.mark.parametrize("name", ["V-B-E", "X-None", "V-BS-1-2", "T-B", "V"])
def test_parse_variant_rejects(name):
    with pytest.raises(ValueError):
        parse_variant(name)


def test_fraction_inputs_stay_exact(two_routes):
    r = route_naive(two_routes, Query("office", "airport", 50))
    assert r.probability == F(4, 5)
    assert isinstance(CostDistribution.point(0).probs[0], (int, float, F))

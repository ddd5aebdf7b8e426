"""Workloads, cross-validated KL evaluation and routing benchmarks."""

from __future__ import annotations

import os
import random
import statistics
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import networkx as nx
from scipy import stats

from .dist import CostDistribution, convolve_all, kl_divergence
from .graph import RoadGraph, Trajectory, extract_tpaths, path_distribution
from .router import Engine, Query, RouteResult

MULTIPLIERS = (0.5, 0.75, 1.0, 1.25, 1.5)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("PACE_WORKERS", "1")))
    except ValueError:
        return 1


def ordered_map(fn, items):
    """``map`` fanned out over ``PACE_WORKERS`` threads, results in input order."""
    n = worker_count()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(fn, items))


# --- workloads ------------------------------------------------------------

@dataclass(frozen=True)
class WorkloadSpec:
    buckets: tuple[tuple[int, int], ...] = ((1, 2), (3, 4), (5, 8))   # hop counts
    multipliers: tuple[float, ...] = MULTIPLIERS
    pairs_per_bucket: int = 3

    def __post_init__(self):
        if self.pairs_per_bucket < 1:
            raise ValueError("pairs_per_bucket must be >= 1")
        if any(m <= 0 for m in self.multipliers):
            raise ValueError("budget multipliers must be positive")


@dataclass(frozen=True)
class WorkloadQuery:
    bucket: str
    multiplier: float
    query: Query


def _nx(g: RoadGraph) -> nx.MultiDiGraph:
    h = nx.MultiDiGraph()
    h.add_nodes_from(g.vertices)
    for e in g.edges.values():
        h.add_edge(e.tail, e.head, key=e.id, expected=float(g.weights[e.id].mean()))
    return h


def least_expected_time(g: RoadGraph, s: str) -> dict[str, float]:
    """Dijkstra with each edge weighted by its mean cost."""
    return nx.single_source_dijkstra_path_length(_nx(g), s, weight="expected")


def make_workload(g: RoadGraph, spec: WorkloadSpec, seed: int, departure: float = 0) -> list[WorkloadQuery]:
    """Source/destination pairs per hop bucket, each at every budget multiplier.

    Budgets are multiples of the least expected travel time, rounded to the
    integer cost grid.
    """
    rng = random.Random(seed)
    h = _nx(g)
    hops = {s: nx.single_source_shortest_path_length(h, s) for s in g.vertices}
    out = []
    for lo, hi in spec.buckets:
        pairs = sorted((s, d) for s in g.vertices for d, k in hops[s].items() if lo <= k <= hi)
        if not pairs:
            continue
        picked = rng.sample(pairs, min(spec.pairs_per_bucket, len(pairs)))
        for s, d in picked:
            base = least_expected_time(g, s)[d]
            for m in spec.multipliers:
                out.append(WorkloadQuery(f"{lo}-{hi}", m, Query(s, d, max(0, round(m * base)), departure)))
    return out


# --- benchmark ------------------------------------------------------------

class AgreementError(RuntimeError):
    def __init__(self, query: Query, results: dict[str, RouteResult]):
        self.query = query
        self.results = results
        detail = ", ".join(f"{k}={float(r.probability):.12f}" for k, r in results.items())
        super().__init__(f"variants disagree on {query}: {detail}")


@dataclass
class BenchRow:
    bucket: str
    multiplier: float
    query: Query
    variant: str
    probability: float
    explored: int
    wall: float


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)

    def summary(self) -> list[dict]:
        groups = defaultdict(list)
        for r in self.rows:
            groups[(r.variant, r.bucket, r.multiplier)].append(r)
        out = []
        for (v, b, m), rs in sorted(groups.items()):
            out.append({
                "variant": v, "bucket": b, "multiplier": m, "queries": len(rs),
                "mean_wall": statistics.fmean(r.wall for r in rs),
                "mean_explored": statistics.fmean(r.explored for r in rs),
                "zero_probability": sum(1 for r in rs if r.probability <= 0),
            })
        return out

    def to_tsv(self) -> str:
        head = "variant\tbucket\tmultiplier\tqueries\tmean_wall\tmean_explored\tzero_probability"
        lines = [head]
        for s in self.summary():
            lines.append(f"{s['variant']}\t{s['bucket']}\t{s['multiplier']}\t{s['queries']}\t"
                         f"{s['mean_wall']:.6f}\t{s['mean_explored']:.2f}\t{s['zero_probability']}")
        return "\n".join(lines) + "\n"


def bench(engine: Engine, workload: Sequence[WorkloadQuery], variants: Sequence[str], *,
          tol: float = 1e-9, prune: bool = True) -> BenchReport:
    """Run every variant on every query and require equal probabilities."""

    def one(wq: WorkloadQuery):
        res, rows = {}, []
        for v in variants:
            r, wall = engine.timed(wq.query, v, prune=prune)
            res[v] = r
            rows.append(BenchRow(wq.bucket, wq.multiplier, wq.query, v, float(r.probability),
                                 r.explored, wall))
        ps = [float(r.probability) for r in res.values()]
        if ps and max(ps) - min(ps) > tol:
            raise AgreementError(wq.query, res)
        return rows

    report = BenchReport()
    for rows in ordered_map(one, list(workload)):
        report.rows.extend(rows)
    return report


# --- KL evaluation --------------------------------------------------------

@dataclass
class FoldKL:
    fold: int
    paths: int
    pace: float
    edge: float
    uncovered: int


@dataclass
class KLReport:
    tau: int
    folds: list[FoldKL]

    @property
    def mean_pace(self) -> float:
        return statistics.fmean(f.pace for f in self.folds)

    @property
    def mean_edge(self) -> float:
        return statistics.fmean(f.edge for f in self.folds)

    @staticmethod
    def _ci(xs: list[float]) -> tuple[float, float]:
        m = statistics.fmean(xs)
        if len(xs) < 2:
            return m, m
        sem = statistics.stdev(xs) / len(xs) ** 0.5
        if sem == 0:
            return m, m
        lo, hi = stats.t.interval(0.95, len(xs) - 1, loc=m, scale=sem)
        return float(lo), float(hi)

    @property
    def ci_pace(self) -> tuple[float, float]:
        return self._ci([f.pace for f in self.folds])

    @property
    def ci_edge(self) -> tuple[float, float]:
        return self._ci([f.edge for f in self.folds])

    def to_tsv(self) -> str:
        lines = ["fold\tpaths\tkl_pace\tkl_edge\tuncovered"]
        for f in self.folds:
            lines.append(f"{f.fold}\t{f.paths}\t{f.pace:.6f}\t{f.edge:.6f}\t{f.uncovered}")
        lo, hi = self.ci_pace
        elo, ehi = self.ci_edge
        lines.append(f"# tau={self.tau} mean_pace={self.mean_pace:.6f} ci95=[{lo:.6f},{hi:.6f}] "
                     f"mean_edge={self.mean_edge:.6f} ci95=[{elo:.6f},{ehi:.6f}]")
        return "\n".join(lines) + "\n"


def _empirical(costs: list[int]) -> CostDistribution:
    cnt = Counter(costs)
    n = len(costs)
    return CostDistribution({c: k / n for c, k in cnt.items()}, normalize=True)


def eval_kl(trajectories: Sequence[Trajectory], graph: RoadGraph, tau: int, folds: int = 5, *,
            seed: int = 0, min_support: int = 5) -> KLReport:
    """Cross-validated KL divergence of path-cost estimates.

    Trajectories are shuffled and split into ``folds`` parts.  For each part,
    T-paths and edge weights are learned from the other parts; every multi-edge
    path travelled at least ``min_support`` times in the held-out part gets an
    empirical ground-truth distribution, compared with the PACE estimate and
    with a plain convolution of edge weights.  Paths none of whose edges were
    seen in training are counted as uncovered and left out of the means.
    ``folds=1`` trains and tests on the same data.
    """
    if folds < 1:
        raise ValueError("folds must be >= 1")
    items = list(trajectories)
    random.Random(seed).shuffle(items)
    parts = [items[i::folds] for i in range(folds)]
    out = []
    for k in range(folds):
        test = parts[k]
        train = items if folds == 1 else [t for i, p in enumerate(parts) if i != k for t in p]
        pg = extract_tpaths(train, graph, tau)
        trained = {e for t in train for e in t.edges}
        truth: dict[tuple, list[int]] = defaultdict(list)
        for t in test:
            if len(t.edges) >= 2:
                truth[t.edges].append(sum(t.costs))
        pace, edge, uncovered = [], [], 0
        for path, costs in sorted(truth.items()):
            if len(costs) < min_support:
                continue
            if not any(e in trained for e in path):
                uncovered += 1
                continue
            d = _empirical(costs)
            pace.append(kl_divergence(d, path_distribution(path, pg)))
            edge.append(kl_divergence(d, convolve_all(pg.base.weights[e] for e in path)))
        out.append(FoldKL(k, len(pace),
                          statistics.fmean(pace) if pace else float("nan"),
                          statistics.fmean(edge) if edge else float("nan"),
                          uncovered))
    return KLReport(tau, out)

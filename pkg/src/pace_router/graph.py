"""Road network and path-centric (PACE) graph model.

A :class:`PaceGraph` is a road graph whose edges carry cost histograms plus a
set of T-paths: multi-edge paths traversed by at least ``tau`` trajectories,
each with an empirical joint distribution over per-edge costs.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .dist import (
    CostDistribution,
    JointDistribution,
    assemble,
    convolve_all,
    total_cost,
)


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str


class RoadGraph:
    """Directed multigraph with one cost distribution per edge."""

    def __init__(self, vertices: Iterable[str], edges: Iterable[Edge],
                 weights: Mapping[str, CostDistribution],
                 coords: Mapping[str, tuple[float, float]] | None = None):
        self.vertices: tuple[str, ...] = tuple(dict.fromkeys(vertices))
        vset = set(self.vertices)
        self.edges: dict[str, Edge] = {}
        self.out_edges: dict[str, list[Edge]] = {v: [] for v in self.vertices}
        self.in_edges: dict[str, list[Edge]] = {v: [] for v in self.vertices}
        for e in edges:
            if e.id in self.edges:
                raise GraphError(f"duplicate edge id {e.id}")
            if e.tail not in vset or e.head not in vset:
                raise GraphError(f"edge {e.id} has an undeclared endpoint")
            if e.tail == e.head:
                raise GraphError(f"edge {e.id} is a self-loop")
            self.edges[e.id] = e
            self.out_edges[e.tail].append(e)
            self.in_edges[e.head].append(e)
        missing = set(self.edges) - set(weights)
        if missing:
            raise GraphError(f"edges without weights: {sorted(missing)}")
        for eid in self.edges:
            if weights[eid].min < 1:
                raise GraphError(f"edge {eid} has a zero-cost outcome")
        self.weights: dict[str, CostDistribution] = {e: weights[e] for e in self.edges}
        self.coords = dict(coords or {})

    def __repr__(self) -> str:
        return f"RoadGraph({len(self.vertices)} vertices, {len(self.edges)} edges)"

    def with_weights(self, weights: Mapping[str, CostDistribution]) -> "RoadGraph":
        merged = dict(self.weights)
        merged.update(weights)
        return RoadGraph(self.vertices, self.edges.values(), merged, self.coords)

    def path_vertices(self, path: Sequence[str]) -> tuple[str, ...]:
        """Vertex sequence of an edge path; raises if edges are not adjacent."""
        if not path:
            return ()
        try:
            first = self.edges[path[0]]
        except KeyError:
            raise GraphError(f"unknown edge {path[0]}") from None
        verts = [first.tail, first.head]
        for eid in path[1:]:
            e = self.edges.get(eid)
            if e is None:
                raise GraphError(f"unknown edge {eid}")
            if e.tail != verts[-1]:
                raise GraphError(f"path {tuple(path)} is disconnected at {eid}")
            verts.append(e.head)
        return tuple(verts)

    def is_simple(self, path: Sequence[str]) -> bool:
        try:
            verts = self.path_vertices(path)
        except GraphError:
            return False
        return len(set(verts)) == len(verts)


@dataclass(frozen=True)
class TPath:
    id: str
    edges: tuple[str, ...]
    joint: JointDistribution = field(repr=False)
    total: CostDistribution = field(repr=False)
    support: int = 0

    @classmethod
    def from_joint(cls, id: str, joint: JointDistribution, support: int) -> "TPath":
        return cls(id, joint.edges, joint, total_cost(joint), support)


@dataclass(frozen=True)
class Trajectory:
    """A map-matched trip: (edge id, observed cost) pairs and a period label.

    Costs are rounded onto the integer grid; observations below one unit are
    raised to one unit.
    """

    steps: tuple[tuple[str, int], ...]
    period_tag: str = "all"

    def __post_init__(self):
        steps = []
        for eid, cost in self.steps:
            if cost < 0:
                raise GraphError(f"negative cost on {eid}")
            steps.append((str(eid), max(1, int(round(cost)))))
        object.__setattr__(self, "steps", tuple(steps))

    @property
    def edges(self) -> tuple[str, ...]:
        return tuple(e for e, _ in self.steps)

    @property
    def costs(self) -> tuple[int, ...]:
        return tuple(c for _, c in self.steps)

    def __len__(self) -> int:
        return len(self.steps)


class PaceGraph:
    """Road graph plus T-paths for one time period."""

    def __init__(self, base: RoadGraph, tpaths: Iterable[TPath] = (), period_tag: str = "all"):
        self.base = base
        self.period_tag = period_tag
        self.tpaths: dict[str, TPath] = {}
        self.by_edges: dict[tuple[str, ...], TPath] = {}
        self.by_first_edge: dict[str, list[TPath]] = defaultdict(list)
        for t in tpaths:
            if len(t.edges) < 2:
                raise GraphError(f"T-path {t.id} has fewer than 2 edges")
            if t.id in self.tpaths or t.id in base.edges:
                raise GraphError(f"duplicate unit id {t.id}")
            if t.edges in self.by_edges:
                raise GraphError(f"T-paths {self.by_edges[t.edges].id} and {t.id} share edges")
            if not base.is_simple(t.edges):
                raise GraphError(f"T-path {t.id} is not a simple path in the base graph")
            self.tpaths[t.id] = t
            self.by_edges[t.edges] = t
            self.by_first_edge[t.edges[0]].append(t)
        for lst in self.by_first_edge.values():
            lst.sort(key=lambda t: (-len(t.edges), -t.support, t.id))
        self.max_tpath_len = max((len(t.edges) for t in self.tpaths.values()), default=1)

    def __repr__(self) -> str:
        return (f"PaceGraph({self.base!r}, {len(self.tpaths)} T-paths, "
                f"period={self.period_tag!r})")

    def weight(self, edge: str) -> CostDistribution:
        return self.base.weights[edge]

    def unit_joint(self, path: tuple[str, ...], start: int, stop: int) -> JointDistribution:
        if stop - start == 1:
            return JointDistribution.single(path[start], self.base.weights[path[start]])
        return self.by_edges[path[start:stop]].joint

    def unit_total(self, path: tuple[str, ...], start: int, stop: int) -> CostDistribution:
        if stop - start == 1:
            return self.base.weights[path[start]]
        return self.by_edges[path[start:stop]].total

    def unit_id(self, path: tuple[str, ...], start: int, stop: int) -> str:
        if stop - start == 1:
            return path[start]
        return self.by_edges[path[start:stop]].id


def candidate_subpaths(t: Trajectory) -> list[tuple[str, ...]]:
    """All contiguous sub-paths with at least two edges, shortest first."""
    edges = t.edges
    n = len(edges)
    return [edges[i:i + k] for k in range(2, n + 1) for i in range(n - k + 1)]


def extract_tpaths(trajectories: Iterable[Trajectory], graph: RoadGraph, tau: int, *,
                   period_tag: str | None = None, max_len: int | None = None) -> PaceGraph:
    """Build a PACE graph from trajectories.

    Every simple sub-path of two or more edges occurring at least ``tau`` times
    becomes a T-path with the empirical joint of its per-edge costs.  Edges
    traversed at least ``tau`` times get their empirical histogram as weight;
    the rest keep the weight supplied with ``graph``.  Occurrences are counted
    per trajectory occurrence.  With ``period_tag`` only trajectories carrying
    that tag are used.
    """
    if tau < 1:
        raise GraphError(f"tau must be >= 1, got {tau}")
    vec_counts: dict[tuple[str, ...], Counter] = defaultdict(Counter)
    edge_counts: dict[str, Counter] = defaultdict(Counter)
    for traj in trajectories:
        if period_tag is not None and traj.period_tag != period_tag:
            continue
        verts = graph.path_vertices(traj.edges)
        edges, costs = traj.edges, traj.costs
        n = len(edges)
        for i in range(n):
            edge_counts[edges[i]][costs[i]] += 1
            seen = {verts[i]}
            top = n if max_len is None else min(n, i + max_len)
            for j in range(i + 1, top):
                if verts[j] in seen:
                    break
                seen.add(verts[j])
                if verts[j + 1] in seen:
                    break
                vec_counts[edges[i:j + 1]][costs[i:j + 1]] += 1
    weights = {}
    for eid, cnt in edge_counts.items():
        total = sum(cnt.values())
        if total >= tau:
            weights[eid] = CostDistribution({c: k / total for c, k in cnt.items()}, normalize=True)
    base = graph.with_weights(weights) if weights else graph
    tpaths = []
    frequent = [(k, cnt) for k, cnt in vec_counts.items() if sum(cnt.values()) >= tau]
    frequent.sort(key=lambda kc: (len(kc[0]), kc[0]))
    for n, (key, cnt) in enumerate(frequent, 1):
        total = sum(cnt.values())
        joint = JointDistribution(key, {v: k / total for v, k in cnt.items()}, normalize=True)
        tpaths.append(TPath.from_joint(f"T{n}", joint, total))
    tag = period_tag if period_tag is not None else "all"
    return PaceGraph(base, tpaths, tag)


def extract_by_period(trajectories: Sequence[Trajectory], graph: RoadGraph, tau: int,
                      **kw) -> dict[str, PaceGraph]:
    tags = sorted({t.period_tag for t in trajectories})
    return {tag: extract_tpaths(trajectories, graph, tau, period_tag=tag, **kw) for tag in tags}


Span = tuple[int, int]


def coarsest_spans(path: Sequence[str], g: PaceGraph) -> list[Span]:
    """Coarsest cover of ``path`` as half-open index spans.

    From each position take the longest T-path starting there and lying inside
    ``path`` (or the bare edge); keep it only if it reaches past everything
    chosen so far.  The kept spans are exactly the maximal T-paths and the
    uncovered edges, in order; neighbours may overlap.
    """
    path = tuple(path)
    spans: list[Span] = []
    reach = 0
    for i, eid in enumerate(path):
        stop = i + 1
        for t in g.by_first_edge.get(eid, ()):
            k = len(t.edges)
            if k > stop - i and path[i:i + k] == t.edges:
                stop = i + k
                break  # sorted longest first
        if stop > reach:
            spans.append((i, stop))
            reach = stop
    return spans


def coarsest_path_sequence(path: Sequence[str], g: PaceGraph) -> list[str]:
    """Unit ids (edge or T-path) of the coarsest cover of ``path``."""
    path = tuple(path)
    g.base.path_vertices(path)
    return [g.unit_id(path, a, b) for a, b in coarsest_spans(path, g)]


def split_runs(spans: Sequence[Span]) -> list[list[Span]]:
    """Group consecutive spans into runs that overlap on at least one edge."""
    runs: list[list[Span]] = []
    for s in spans:
        if runs and s[0] < runs[-1][-1][1]:
            runs[-1].append(s)
        else:
            runs.append([s])
    return runs


def run_joint(path: tuple[str, ...], run: Sequence[Span], g: PaceGraph) -> JointDistribution:
    """Joint of a run of overlapping units by left-folded assembly."""
    a, b = run[0]
    joint = g.unit_joint(path, a, b)
    reach = b
    for a, b in run[1:]:
        joint = assemble(joint, g.unit_joint(path, a, b), overlap=reach - a)
        reach = b
    return joint


def run_total(path: tuple[str, ...], run: Sequence[Span], g: PaceGraph) -> CostDistribution:
    """Total of a run, folding the assembly without building the full joint.

    Each later unit overlaps only edges of the unit before it, so the state
    ``(values on the last unit, cost so far)`` carries everything the next
    assembly step reads.  Same rule as :func:`assemble`, applied to that
    projection, so the result equals ``total_cost(run_joint(...))``.
    """
    if len(run) == 1:
        return g.unit_total(path, *run[0])
    a, b = run[0]
    states: dict[tuple, object] = defaultdict(int)
    for vec, p in g.unit_joint(path, a, b).mass.items():
        states[(vec, sum(vec))] += p
    reach = b
    for a, b in run[1:]:
        k = reach - a
        reach = b
        groups: dict[tuple, list] = defaultdict(list)
        marg: dict[tuple, object] = defaultdict(int)
        for vec, p in g.unit_joint(path, a, b).mass.items():
            groups[vec[:k]].append((vec[k:], p))
            marg[vec[:k]] += p
        nxt: dict[tuple, object] = defaultdict(int)
        covered = 0
        for (last, s), p in states.items():
            key = last[len(last) - k:]
            grp = groups.get(key)
            if grp is None:
                continue
            covered += p
            m = marg[key]
            for rest, q in grp:
                nxt[(key + rest, s + sum(rest))] += p * q / m
        if not nxt:
            rest_marg: dict[tuple, object] = defaultdict(int)
            for key, grp in groups.items():
                for rest, q in grp:
                    rest_marg[rest] += q
            for (last, s), p in states.items():
                key = last[len(last) - k:]
                for rest, q in rest_marg.items():
                    nxt[(key + rest, s + sum(rest))] += p * q
            covered = 0
        if covered and covered != 1:
            nxt = {st: p / covered for st, p in nxt.items()}
        states = nxt
    out: dict[int, object] = defaultdict(int)
    for (_, s), p in states.items():
        out[s] += p
    costs = tuple(sorted(out))
    return CostDistribution._raw(costs, tuple(out[c] for c in costs))


def path_runs(path: Sequence[str], g: PaceGraph) -> list[list[Span]]:
    return split_runs(coarsest_spans(tuple(path), g))


def path_joint(path: Sequence[str], g: PaceGraph) -> JointDistribution:
    """Full joint distribution of ``path`` assembled over its coarsest cover."""
    path = tuple(path)
    g.base.path_vertices(path)
    spans = coarsest_spans(path, g)
    a, b = spans[0]
    joint = g.unit_joint(path, a, b)
    reach = b
    for a, b in spans[1:]:
        joint = assemble(joint, g.unit_joint(path, a, b), overlap=max(0, reach - a))
        reach = b
    return joint


def path_distribution(path: Sequence[str], g: PaceGraph) -> CostDistribution:
    """Total-cost distribution of ``path`` under the PACE model.

    Runs of overlapping units are assembled jointly; runs that do not overlap
    are independent, so their totals are convolved.  This equals
    ``total_cost(path_joint(path, g))`` without materialising the full joint.
    """
    path = tuple(path)
    if not path:
        return CostDistribution.point(0)
    g.base.path_vertices(path)
    return convolve_all(run_total(path, run, g) for run in path_runs(path, g))


@dataclass
class PathState:
    """Incremental PACE evaluation of a growing path.

    ``closed`` edges form a prefix whose decomposition can no longer change
    however the path is extended; ``closed_total`` is its distribution.
    """

    edges: tuple[str, ...]
    closed: int
    closed_total: CostDistribution
    dist: CostDistribution


def start_state() -> PathState:
    zero = CostDistribution.point(0)
    return PathState((), 0, zero, zero)


def extend_state(state: PathState, added: Sequence[str], g: PaceGraph) -> PathState:
    """Evaluate ``state.edges + added`` reusing the closed prefix."""
    from .dist import convolve

    path = state.edges + tuple(added)
    n = len(path)
    tail = path[state.closed:]
    runs = split_runs(coarsest_spans(tail, g))
    totals = [run_total(tail, run, g) for run in runs]
    # a future T-path crossing the end starts at index >= n - L + 1
    limit = n - g.max_tpath_len + 1
    closed, closed_total = state.closed, state.closed_total
    k = 0
    while k < len(runs) and state.closed + runs[k][-1][1] <= limit:
        closed_total = convolve(closed_total, totals[k])
        closed = state.closed + runs[k][-1][1]
        k += 1
    dist = closed_total
    for t in totals[k:]:
        dist = convolve(dist, t)
    return PathState(path, closed, closed_total, dist)

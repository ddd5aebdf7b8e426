"""Virtual paths: precomputed assemblies of overlapping T-paths.

Once every run of overlapping T-paths has a V-path carrying its total
distribution, the distribution of any path is a plain convolution of the
totals of its non-overlapping units (edges, T-paths, V-paths).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .dist import CostDistribution, JointDistribution, convolve_all
from .graph import (
    GraphError,
    PaceGraph,
    RoadGraph,
    coarsest_spans,
    run_joint,
    run_total,
    split_runs,
)

log = logging.getLogger(__name__)

EDGE, TPATH, VPATH = "E", "T", "V"


@dataclass(frozen=True)
class Unit:
    """An edge, T-path or V-path usable as one routing step."""

    id: str
    kind: str
    edges: tuple[str, ...]
    vertices: tuple[str, ...]
    total: CostDistribution = field(repr=False)

    @property
    def tail(self) -> str:
        return self.vertices[0]

    @property
    def head(self) -> str:
        return self.vertices[-1]


@dataclass(frozen=True)
class VPath:
    id: str
    edges: tuple[str, ...]
    joint: JointDistribution | None = field(repr=False)
    total: CostDistribution = field(repr=False)
    constituents: tuple[str, ...] = ()


class UpdatedPaceGraph:
    """Base graph plus T-path and V-path units, each with a total distribution.

    Joints are not kept: routing only needs totals.  ``tpath_edges`` retains
    the T-path edge sequences, which decide where a unit boundary may fall.
    """

    def __init__(self, base: RoadGraph, units: Iterable[Unit], period_tag: str = "all",
                 max_vpath_len: int | None = None):
        self.base = base
        self.period_tag = period_tag
        self.max_vpath_len = max_vpath_len
        self.units: dict[str, Unit] = {}
        self.by_edges: dict[tuple[str, ...], Unit] = {}
        for e in base.edges.values():
            self._add(Unit(e.id, EDGE, (e.id,), (e.tail, e.head), base.weights[e.id]))
        for u in units:
            if u.kind == EDGE:
                continue
            self._add(u)
        self.out_units: dict[str, list[Unit]] = {v: [] for v in base.vertices}
        self.in_units: dict[str, list[Unit]] = {v: [] for v in base.vertices}
        for u in self.units.values():
            self.out_units[u.tail].append(u)
            self.in_units[u.head].append(u)
        tps = [u for u in self.units.values() if u.kind == TPATH]
        # T-path view used for boundary checks and for coarsest covers
        self.tpath_units: list[Unit] = tps
        self.tpaths_by_first_edge: dict[str, list[Unit]] = {}
        for t in sorted(tps, key=lambda t: (-len(t.edges), t.id)):
            self.tpaths_by_first_edge.setdefault(t.edges[0], []).append(t)
        self.max_tpath_len = max((len(t.edges) for t in tps), default=1)

    def _add(self, u: Unit):
        if u.id in self.units:
            raise GraphError(f"duplicate unit id {u.id}")
        if u.edges in self.by_edges:
            raise GraphError(f"units {self.by_edges[u.edges].id} and {u.id} share edges")
        if abs(sum(u.total.probs) - 1) > 1e-9:
            raise GraphError(f"unit {u.id} total is not normalised")
        self.units[u.id] = u
        self.by_edges[u.edges] = u

    @property
    def by_first_edge(self):
        # duck-types PaceGraph for coarsest_spans
        return self.tpaths_by_first_edge

    def count(self, kind: str) -> int:
        return sum(1 for u in self.units.values() if u.kind == kind)

    def vpaths(self) -> list[Unit]:
        return [u for u in self.units.values() if u.kind == VPATH]

    def __repr__(self) -> str:
        return (f"UpdatedPaceGraph({self.base!r}, {self.count(TPATH)} T-paths, "
                f"{self.count(VPATH)} V-paths, period={self.period_tag!r})")


def _overlap(a: tuple[str, ...], b: tuple[str, ...]) -> int:
    # edges are unique along a simple path, so at most one alignment exists
    try:
        i = a.index(b[0])
    except ValueError:
        return 0
    k = len(a) - i
    if k >= len(b) or a[i:] != b[:k]:
        return 0
    return k


def combine(a, b, g: PaceGraph, *, check_tpath: bool = True,
            max_len: int | None = None, keep_joint: bool = False) -> VPath | None:
    """Merge two overlapping T-/V-paths into a V-path.

    Returns ``None`` when the merged path is already a T-path, is not simple,
    exceeds ``max_len`` edges, or its coarsest cover is not a single chain of
    overlapping T-paths (then some other unit set describes it).  The total is
    assembled from the T-paths of that cover, so it does not depend on which
    pair produced the merge.  The full joint is materialised only with
    ``keep_joint``; its support grows quickly with length.
    """
    k = _overlap(a.edges, b.edges)
    if k == 0:
        raise GraphError(f"no overlap between {a.id} and {b.id}")
    seq = a.edges + b.edges[k:]
    if max_len is not None and len(seq) > max_len:
        return None
    if check_tpath and seq in g.by_edges:
        return None
    if not g.base.is_simple(seq):
        return None
    spans = coarsest_spans(seq, g)
    runs = split_runs(spans)
    if len(runs) != 1 or len(spans) < 2:
        return None
    joint = run_joint(seq, runs[0], g) if keep_joint else None
    constituents = tuple(g.unit_id(seq, s, t) for s, t in spans)
    return VPath("", seq, joint, run_total(seq, runs[0], g), constituents)


def build_vpaths(g: PaceGraph, *, max_len: int | None = None,
                 keep_joints: bool = False) -> UpdatedPaceGraph:
    """Iteratively combine overlapping T-paths, then V-paths, to a fixed point.

    Iteration 1 pairs T-paths; each later iteration pairs the V-paths created
    in the previous iteration with every V-path known so far, in both orders.
    All V-paths are kept.  ``max_len`` caps V-path length in edges.
    """
    found: dict[tuple[str, ...], VPath] = {}
    tps = sorted(g.tpaths.values(), key=lambda t: t.id)
    by_first: dict[str, list] = {}
    for t in tps:
        by_first.setdefault(t.edges[0], []).append(t)

    def partners(a, index):
        for i in range(1, len(a.edges)):
            for b in index.get(a.edges[i], ()):
                if _overlap(a.edges, b.edges):
                    yield b

    new = []
    for a in tps:
        for b in partners(a, by_first):
            v = combine(a, b, g, max_len=max_len, keep_joint=keep_joints)
            if v is not None and v.edges not in found:
                found[v.edges] = v
                new.append(v)
    iterations = 1
    limit = len(g.base.vertices)
    while new and iterations < limit:
        iterations += 1
        v_first: dict[str, list] = {}
        for v in found.values():
            v_first.setdefault(v.edges[0], []).append(v)
        new_first: dict[str, list] = {}
        for v in new:
            new_first.setdefault(v.edges[0], []).append(v)
        fresh = []
        for a in new:
            for b in partners(a, v_first):
                _try(a, b, g, max_len, keep_joints, found, fresh)
        for a in list(found.values()):
            for b in partners(a, new_first):
                _try(a, b, g, max_len, keep_joints, found, fresh)
        new = fresh
    log.info("built %d V-paths in %d iterations", len(found), iterations)
    return _updated(g, found.values(), max_len, keep_joints)


def _try(a, b, g, max_len, keep_joints, found, fresh):
    k = _overlap(a.edges, b.edges)
    if not k:
        return
    seq = a.edges + b.edges[k:]
    if seq in found:
        return
    v = combine(a, b, g, check_tpath=False, max_len=max_len, keep_joint=keep_joints)
    if v is not None:
        found[v.edges] = v
        fresh.append(v)


def _updated(g: PaceGraph, vps, max_len, keep_joints) -> UpdatedPaceGraph:
    units = []
    for t in sorted(g.tpaths.values(), key=lambda t: t.id):
        units.append(Unit(t.id, TPATH, t.edges, g.base.path_vertices(t.edges), t.total))
    ordered = sorted(vps, key=lambda v: (len(v.edges), v.edges))
    for n, v in enumerate(ordered, 1):
        units.append(Unit(f"V{n}", VPATH, v.edges, g.base.path_vertices(v.edges), v.total))
    gp = UpdatedPaceGraph(g.base, units, g.period_tag, max_vpath_len=max_len)
    if keep_joints:
        gp.vpath_records = {f"V{n}": VPath(f"V{n}", v.edges, v.joint, v.total, v.constituents)
                            for n, v in enumerate(ordered, 1)}
    gp.source = g
    return gp


def canonical_units(path: Sequence[str], gp: UpdatedPaceGraph) -> list[tuple[int, int]]:
    """Non-overlapping decomposition of ``path``: one span per run of its coarsest cover."""
    path = tuple(path)
    runs = split_runs(coarsest_spans(path, gp))
    return [(run[0][0], run[-1][1]) for run in runs]


def convolution_path_distribution(path: Sequence[str], gp: UpdatedPaceGraph) -> CostDistribution:
    """Distribution of ``path`` as a convolution of unit totals.

    A run without a recorded V-path (possible only under a length cap) is
    assembled from the source PACE graph when one is attached.
    """
    path = tuple(path)
    if not path:
        return CostDistribution.point(0)
    gp.base.path_vertices(path)
    totals = []
    runs = split_runs(coarsest_spans(path, gp))
    for run in runs:
        a, b = run[0][0], run[-1][1]
        unit = gp.by_edges.get(path[a:b])
        if unit is not None:
            totals.append(unit.total)
            continue
        src = getattr(gp, "source", None)
        if src is None:
            raise GraphError(f"no unit for run {path[a:b]} and no joints to assemble it")
        totals.append(run_total(path, run, src))
    return convolve_all(totals)

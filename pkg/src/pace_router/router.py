"""Query answering: maximise Prob(cost <= B) from source to destination.

Three searches share the candidate/priority machinery:

* :func:`route_naive` explores every budget-feasible simple path in order of
  expected cost and keeps the best probability (the slow baseline);
* :func:`route_tpaths` runs best-first on the PACE graph, evaluating each
  candidate path exactly and ordering by an upper bound on what any of its
  completions can reach;
* :func:`route` runs best-first on the V-path closure, where candidate
  distributions are convolutions of unit totals, which also makes
  stochastic-dominance pruning sound.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field
from typing import Sequence

from .dist import CostDistribution, convolve, dominates, prob_within
from .graph import GraphError, PaceGraph, PathState, extend_state, start_state
from .heuristics import Heuristic
from .vpaths import Unit, UpdatedPaceGraph


@dataclass(frozen=True)
class Query:
    source: str
    dest: str
    budget: int
    departure: float = 0

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError(f"budget must be >= 0, got {self.budget}")


@dataclass
class CandidatePath:
    path: tuple[str, ...]
    vertices: tuple[str, ...]
    dist: CostDistribution = field(repr=False)
    max_prob: float
    units: tuple[str, ...] = ()
    pending: frozenset = field(default=frozenset(), repr=False)
    state: PathState | None = field(default=None, repr=False)
    alive: bool = field(default=True, repr=False)

    @property
    def frontier(self) -> str:
        return self.vertices[-1]


@dataclass(frozen=True)
class RouteResult:
    path: tuple[str, ...]
    probability: float
    explored: int
    units: tuple[str, ...] = ()
    dist: CostDistribution | None = field(default=None, repr=False, compare=False)


def max_prob(dist: CostDistribution, frontier: str, budget, h: Heuristic):
    """Upper bound on reaching the destination within ``budget``.

    ``dist`` is the cost already spent to reach ``frontier``.
    """
    total = 0
    for c, p in zip(dist.costs, dist.probs):
        if c > budget:
            break
        total += p * h.u(frontier, budget - c)
    return min(total, 1)


def dominance_prune(new: CandidatePath, queued: list[CandidatePath]) -> tuple[bool, list[CandidatePath]]:
    """Decide whether ``new`` survives among same-context ``queued`` candidates.

    One candidate stands in for another when its distribution dominates (or,
    for an incumbent, equals) the other's, it has visited a subset of the
    other's vertices, and its path has no more edges.  The last condition keeps
    every replacement at least as early in queue order, so pruning never makes
    the search pop more candidates.  Returns whether ``new`` is kept and the
    queued candidates it evicts.
    """
    vis = frozenset(new.vertices)
    n = len(new.path)
    for c in queued:
        if c.alive and len(c.path) <= n and frozenset(c.vertices) <= vis:
            if c.dist == new.dist or dominates(c.dist, new.dist):
                return False, []
    evict = [c for c in queued
             if c.alive and n <= len(c.path) and vis <= frozenset(c.vertices)
             and dominates(new.dist, c.dist)]
    return True, evict


PRIORITY_GRID = 1e-12


def _priority(p) -> float:
    # bounds that differ only by rounding noise count as ties
    return round(float(p) / PRIORITY_GRID) * PRIORITY_GRID


class _Queue:
    """Max-priority queue of candidates; ties go to fewer edges, then insertion order."""

    def __init__(self):
        self.heap = []
        self.counter = itertools.count()
        self.pushed = 0

    def push(self, c: CandidatePath):
        self.pushed += 1
        heapq.heappush(self.heap, (-_priority(c.max_prob), len(c.path), next(self.counter), c))

    def pop(self) -> CandidatePath | None:
        while self.heap:
            c = heapq.heappop(self.heap)[-1]
            if c.alive:
                return c
        return None


def _trivial(q: Query) -> RouteResult:
    return RouteResult((), 1, 0, (), CostDistribution.point(0))


def _check_query(base, q: Query):
    for v in (q.source, q.dest):
        if v not in base.out_edges:
            raise GraphError(f"vertex {v} not in graph")


# --- V-path routing -------------------------------------------------------

class _Boundaries:
    """T-path partial matches used to keep unit sequences canonical.

    A unit sequence describes its path's distribution correctly only if no
    T-path of the path straddles a unit boundary.  ``pending`` holds every
    T-path whose proper prefix equals a suffix of the current path; completing
    one of them later would straddle the current end.
    """

    def __init__(self, gp: UpdatedPaceGraph):
        self.gp = gp
        self.tps = gp.tpath_units
        self.by_first = gp.tpaths_by_first_edge
        self._opened: dict[str, tuple] = {}

    def opened(self, u: Unit) -> tuple:
        got = self._opened.get(u.id)
        if got is None:
            e = u.edges
            m = len(e)
            out = []
            for i in range(m):
                for t in self.by_first.get(e[i], ()):
                    k = m - i
                    if len(t.edges) > k and t.edges[:k] == e[i:]:
                        out.append((t.id, k))
            got = self._opened[u.id] = tuple(out)
        return got

    def advance(self, pending: frozenset, u: Unit) -> frozenset | None:
        """Pending set after appending ``u``, or ``None`` if a T-path would straddle."""
        e = u.edges
        m = len(e)
        nxt = set(self.opened(u))
        for tid, k in pending:
            rest = self.gp.units[tid].edges[k:]
            if len(rest) <= m:
                if e[:len(rest)] == rest:
                    return None
            elif rest[:m] == e:
                nxt.add((tid, k + m))
        return frozenset(nxt)


def route(gp: UpdatedPaceGraph, q: Query, h: Heuristic, *, prune: bool = True) -> RouteResult:
    """Best-first search over edges, T-paths and V-paths.

    Candidates are popped by ``max_prob``; the first one at the destination is
    optimal because the heuristic never underestimates.  An extension is
    dropped when its least cost plus ``getMin`` of its end exceeds the budget
    or its bound is 0.  With ``prune`` on, candidates at the same frontier with
    the same pending T-path matches are compared by stochastic dominance.
    """
    _check_query(gp.base, q)
    if q.source == q.dest:
        return _trivial(q)
    B = q.budget
    bounds = _Boundaries(gp)
    queue = _Queue()
    buckets: dict[tuple, list[CandidatePath]] = {}
    root = CandidatePath((), (q.source,), CostDistribution.point(0), 1)

    def extend(c: CandidatePath, u: Unit):
        visited = set(c.vertices)
        if any(v in visited for v in u.vertices[1:]):
            return
        pending = bounds.advance(c.pending, u)
        if pending is None:
            return
        dist = convolve(c.dist, u.total)
        if dist.min + h.get_min(u.head) > B:
            return
        mp = max_prob(dist, u.head, B, h)
        if mp <= 0:
            return
        new = CandidatePath(c.path + u.edges, c.vertices + u.vertices[1:], dist, mp,
                            c.units + (u.id,), pending)
        if prune:
            key = (u.head, pending)
            lst = buckets.setdefault(key, [])
            keep, evict = dominance_prune(new, lst)
            if not keep:
                return
            for x in evict:
                x.alive = False
            lst[:] = [x for x in lst if x.alive]
            lst.append(new)
        queue.push(new)

    c = root
    while c is not None:
        if c.frontier == q.dest:
            return RouteResult(c.path, prob_within(c.dist, B), queue.pushed, c.units, c.dist)
        if prune and c is not root:
            lst = buckets.get((c.frontier, c.pending))
            if lst is not None:
                lst.remove(c)
        for u in gp.out_units[c.frontier]:
            extend(c, u)
        c = queue.pop()
    return RouteResult((), 0, queue.pushed)


# --- T-path routing -------------------------------------------------------

def _pace_units(g: PaceGraph, v: str):
    for e in g.base.out_edges[v]:
        yield e.id, (e.id,), (e.tail, e.head)
    for e in g.base.out_edges[v]:
        for t in g.by_first_edge.get(e.id, ()):
            yield t.id, t.edges, g.base.path_vertices(t.edges)


def _closed_bound(state: PathState, vertices, budget, h: Heuristic):
    # the open tail may still merge with later T-paths, so bound from the
    # last vertex whose prefix distribution is final
    return max_prob(state.closed_total, vertices[state.closed], budget, h)


def route_tpaths(g: PaceGraph, q: Query, h: Heuristic) -> RouteResult:
    """Best-first search on the PACE graph without V-paths.

    Each candidate's distribution is evaluated exactly under the PACE model.
    Because appending edges can still change how the last few edges are
    decomposed, the priority bounds from the end of the settled prefix.
    Dominance pruning is not applied: without V-paths it is not sound.
    """
    _check_query(g.base, q)
    if q.source == q.dest:
        return _trivial(q)
    B = q.budget
    queue = _Queue()
    root = CandidatePath((), (q.source,), CostDistribution.point(0), 1, state=start_state())

    c = root
    while c is not None:
        if c.frontier == q.dest:
            return RouteResult(c.path, prob_within(c.dist, B), queue.pushed, c.units, c.dist)
        visited = set(c.vertices)
        for uid, edges, verts in _pace_units(g, c.frontier):
            if any(v in visited for v in verts[1:]):
                continue
            state = extend_state(c.state, edges, g)
            vertices = c.vertices + verts[1:]
            if state.closed_total.min + h.get_min(vertices[state.closed]) > B:
                continue
            if vertices[-1] == q.dest:
                mp = prob_within(state.dist, B)
            else:
                mp = _closed_bound(state, vertices, B, h)
            if mp <= 0:
                continue
            queue.push(CandidatePath(state.edges, vertices, state.dist, mp,
                                     c.units + (uid,), state=state))
        c = queue.pop()
    return RouteResult((), 0, queue.pushed)


def route_naive(g: PaceGraph, q: Query) -> RouteResult:
    """Exhaustive baseline: expand by expected cost, keep the best complete path.

    Every simple path whose settled prefix still fits the budget is explored,
    so the answer is exact.  Each distinct edge sequence is expanded once.
    """
    _check_query(g.base, q)
    if q.source == q.dest:
        return _trivial(q)
    B = q.budget
    heap = []
    counter = itertools.count()
    pushed = 0
    seen: set[tuple[str, ...]] = set()
    best: CandidatePath | None = None
    best_p = 0
    heap.append((0, next(counter), CandidatePath((), (q.source,), CostDistribution.point(0), 1,
                                                 state=start_state())))
    while heap:
        _, _, c = heapq.heappop(heap)
        visited = set(c.vertices)
        for uid, edges, verts in _pace_units(g, c.frontier):
            if any(v in visited for v in verts[1:]):
                continue
            path = c.path + edges
            if path in seen:
                continue
            seen.add(path)
            state = extend_state(c.state, edges, g)
            if state.closed_total.min + (len(path) - state.closed) > B:
                continue
            vertices = c.vertices + verts[1:]
            new = CandidatePath(path, vertices, state.dist, 0, c.units + (uid,), state=state)
            if vertices[-1] == q.dest:
                p = prob_within(state.dist, B)
                if best is None or p > best_p + 1e-12 or (
                        abs(p - best_p) <= 1e-12 and path < best.path):
                    best, best_p = new, p
                continue
            pushed += 1
            heapq.heappush(heap, (state.dist.mean(), next(counter), new))
    if best is None or best_p <= 0:
        return RouteResult((), 0, pushed)
    return RouteResult(best.path, best_p, pushed, best.units, best.dist)


# --- time periods ---------------------------------------------------------

@dataclass(frozen=True)
class PeriodWindow:
    start: float
    end: float
    tag: str

    def __contains__(self, t) -> bool:
        return self.start <= t < self.end


class PeriodSchedule:
    """Maps a departure time to a period tag through half-open windows."""

    def __init__(self, windows: Sequence[PeriodWindow] = ()):
        self.windows = list(windows)

    def tag(self, t) -> str:
        if not self.windows:
            return "all"
        for w in self.windows:
            if t in w:
                return w.tag
        raise GraphError(f"no graph for period: departure {t}")

    @classmethod
    def parse(cls, text: str) -> "PeriodSchedule":
        """``tag:start-end`` entries separated by commas, e.g. ``peak:0-3600,off:3600-86400``."""
        ws = []
        for part in filter(None, (p.strip() for p in text.split(","))):
            tag, _, span = part.partition(":")
            a, _, b = span.partition("-")
            ws.append(PeriodWindow(float(a), float(b), tag))
        return cls(ws)


VARIANTS = ("T-None", "T-B-E", "T-B-P", "T-BS", "V-None", "V-B-P", "V-BS")


def parse_variant(name: str) -> tuple[str, str, int]:
    """``(graph kind, heuristic kind, delta)`` for names like ``V-BS-5``."""
    parts = name.split("-")
    if parts[0] not in ("T", "V") or len(parts) < 2:
        raise ValueError(f"unknown variant {name!r}")
    kind = parts[1]
    delta = 1
    if kind == "BS":
        if len(parts) == 3:
            delta = int(parts[2])
        elif len(parts) != 2:
            raise ValueError(f"unknown variant {name!r}")
        return parts[0], "table", delta
    if kind == "None" and len(parts) == 2:
        return parts[0], "none", delta
    if kind == "B" and len(parts) == 3 and parts[2] in ("E", "P"):
        if parts[0] == "V" and parts[2] == "E":
            raise ValueError(f"unknown variant {name!r}")
        return parts[0], "binary-" + parts[2], delta
    raise ValueError(f"unknown variant {name!r}")


class Engine:
    """Per-period graphs plus lazily built, cached per-destination heuristics."""

    def __init__(self, graphs: dict[str, PaceGraph], schedule: PeriodSchedule | None = None, *,
                 vgraphs: dict[str, UpdatedPaceGraph] | None = None, max_vpath_len: int | None = None):
        from .vpaths import build_vpaths

        self.graphs = graphs
        self.schedule = schedule or PeriodSchedule()
        self.vgraphs = dict(vgraphs or {})
        for tag, g in graphs.items():
            if tag not in self.vgraphs:
                self.vgraphs[tag] = build_vpaths(g, max_len=max_vpath_len)
        self._cache: dict[tuple, Heuristic] = {}

    def period(self, q: Query) -> str:
        tag = self.schedule.tag(q.departure)
        if tag not in self.graphs:
            raise GraphError(f"no graph for period: {tag}")
        return tag

    def heuristic(self, tag: str, dest: str, kind: str, delta: int = 1) -> Heuristic:
        from .heuristics import make_heuristic

        key = (tag, dest, kind, delta)
        h = self._cache.get(key)
        if h is None:
            gp = self.vgraphs[tag]
            if kind == "binary-E":
                h = make_heuristic(gp, dest, "binary", tpaths=False)
            elif kind == "binary-P":
                h = make_heuristic(gp, dest, "binary")
            else:
                h = make_heuristic(gp, dest, kind, delta=delta)
            self._cache[key] = h
        return h

    def answer(self, q: Query, variant: str = "V-BS", *, prune: bool = True) -> RouteResult:
        tag = self.period(q)
        gkind, hkind, delta = parse_variant(variant)
        h = self.heuristic(tag, q.dest, hkind, delta)
        if gkind == "V":
            return route(self.vgraphs[tag], q, h, prune=prune)
        return route_tpaths(self.graphs[tag], q, h)

    def timed(self, q: Query, variant: str = "V-BS", **kw) -> tuple[RouteResult, float]:
        t0 = time.perf_counter()
        r = self.answer(q, variant, **kw)
        return r, time.perf_counter() - t0

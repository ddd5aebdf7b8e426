"""Destination-specific admissible heuristics.

``U(v, x)`` upper-bounds the best probability of reaching the destination
from ``v`` within ``x`` cost units.  Two flavours:

* binary: 0 below the least cost ``getMin(v)``, 1 from there on;
* budget-specific: a table over a budget grid ``delta, 2*delta, ...``
  filled by the recursion ``U(v, x) = max_z sum_k W(v->z)(k) * U(z, x - k)``.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping

from .dist import CostDistribution
from .graph import GraphError
from .vpaths import EDGE, TPATH, UpdatedPaceGraph

INF = math.inf
ONE_TOL = 1e-12


@dataclass(frozen=True)
class ReversedUnit:
    id: str
    tail: str            # forward head
    head: str            # forward tail
    weight: int          # least cost of the forward total
    covered: int         # edges covered when the unit is a T-path, else 0
    edges: tuple[str, ...]   # forward edge order


@dataclass
class ReversedGraph:
    vertices: tuple[str, ...]
    out_units: dict[str, list[ReversedUnit]]


def _forward_units(g):
    """(id, kind, edges, tail, head, total) for edges and T-paths of either graph type."""
    if isinstance(g, UpdatedPaceGraph):
        for u in g.units.values():
            if u.kind in (EDGE, TPATH):
                yield u.id, u.kind, u.edges, u.tail, u.head, u.total
        return
    for e in g.base.edges.values():
        yield e.id, EDGE, (e.id,), e.tail, e.head, g.base.weights[e.id]
    for t in g.tpaths.values():
        verts = g.base.path_vertices(t.edges)
        yield t.id, TPATH, t.edges, verts[0], verts[-1], t.total


def reverse(g, *, include_tpaths: bool = True) -> ReversedGraph:
    """Reverse every edge (and T-path) keeping only its least cost."""
    out: dict[str, list[ReversedUnit]] = {v: [] for v in g.base.vertices}
    for uid, kind, edges, tail, head, total in _forward_units(g):
        if kind == TPATH and not include_tpaths:
            continue
        covered = len(edges) if kind == TPATH else 0
        out[head].append(ReversedUnit(uid, head, tail, total.min, covered, edges))
    for lst in out.values():
        lst.sort(key=lambda r: r.id)
    return ReversedGraph(tuple(g.base.vertices), out)


@dataclass
class MinCostMap:
    dest: str
    get_min: dict[str, float]
    c2: dict[str, int] = field(default_factory=dict, repr=False)
    parent: dict[str, tuple[str, ReversedUnit]] = field(default_factory=dict, repr=False)

    def __getitem__(self, v: str) -> float:
        return self.get_min.get(v, INF)

    def reachable(self) -> list[str]:
        return [v for v, c in self.get_min.items() if c < INF]


def _trace(v: str, parent: Mapping, dest: str, cap: int):
    """Forward edge sequence of the tree path from ``v`` to ``dest``."""
    edges: list[str] = []
    steps = 0
    while v != dest:
        p = parent.get(v)
        if p is None or steps > cap:
            return None
        u, ru = p
        edges.extend(ru.edges)
        v = u
        steps += 1
    return tuple(edges)


def shortest_path_tree(rg: ReversedGraph, dest: str, *, max_rounds: int | None = None) -> MinCostMap:
    """Least cost to ``dest`` from every vertex, preferring T-path coverage.

    Label-correcting search from ``dest`` over reversed edges and T-paths.
    Each vertex holds one label (c1 = cost, c2 = edges covered by T-paths).
    A new label that is no worse in both and better in one replaces the old.
    When the two labels trade off, compare the underlying forward paths: the
    same path keeps the label with more T-path coverage, different paths keep
    the cheaper one.
    """
    if dest not in rg.out_units:
        raise GraphError(f"destination {dest} not in graph")
    c1: dict[str, float] = {v: INF for v in rg.vertices}
    c2: dict[str, int] = {v: 0 for v in rg.vertices}
    parent: dict[str, tuple[str, ReversedUnit]] = {}
    c1[dest] = 0
    cap = len(rg.vertices)
    if max_rounds is None:
        max_rounds = 50 * (cap + 1) * (1 + sum(len(x) for x in rg.out_units.values()))
    counter = itertools.count()
    heap = [(0, 0, next(counter), dest)]
    rounds = 0
    while heap and rounds < max_rounds:
        k1, negk2, _, v = heapq.heappop(heap)
        if k1 != c1[v] or -negk2 != c2[v]:
            continue
        rounds += 1
        for ru in rg.out_units[v]:
            u = ru.head
            if u == dest:
                continue
            n1 = c1[v] + ru.weight
            n2 = c2[v] + ru.covered
            o1, o2 = c1[u], c2[u]
            if n1 <= o1 and n2 >= o2 and (n1 < o1 or n2 > o2):
                update = True
            elif (n1 < o1 and n2 < o2) or (n1 > o1 and n2 > o2):
                old = _trace(u, parent, dest, cap)
                tail = _trace(v, parent, dest, cap)
                new = None if tail is None else ru.edges + tail
                same = old is not None and old == new
                update = (n2 > o2) if same else (n1 < o1)
            else:
                update = False
            if update:
                c1[u], c2[u] = n1, n2
                parent[u] = (v, ru)
                heapq.heappush(heap, (n1, -n2, next(counter), u))
    return MinCostMap(dest, c1, c2, parent)


def edge_tree(g, dest: str) -> MinCostMap:
    """Least cost to ``dest`` using edges only (classical shortest-path tree)."""
    return shortest_path_tree(reverse(g, include_tpaths=False), dest)


def binary_U(v: str, x, m: MinCostMap) -> int:
    return 1 if x >= m[v] else 0


@dataclass
class HeuristicTable:
    """U(v, j*delta) for j = 1..eta, stored as the band between l and s.

    ``rows[v] = (l, s, values)`` where ``l`` and ``s`` are grid budgets and
    ``values`` covers l, l+delta, ..., s.  Cells below ``l`` are 0, cells from
    ``s`` on are 1.  Vertices that cannot reach the destination have no row.
    """

    dest: str
    delta: int
    eta: int
    rows: dict[str, tuple[int, int, tuple[float, ...]]]

    @property
    def horizon(self) -> int:
        return self.delta * self.eta

    def cell(self, v: str, j: int) -> float:
        """Value at grid column ``j`` (budget ``j * delta``)."""
        if v == self.dest:
            return 1.0
        row = self.rows.get(v)
        if row is None:
            return 0.0
        x = j * self.delta
        l, s, vals = row
        if x < l:
            return 0.0
        if x >= s:
            return 1.0
        return vals[(x - l) // self.delta]

    def row(self, v: str) -> list[float]:
        return [self.cell(v, j) for j in range(1, self.eta + 1)]


def lookup_U(t: HeuristicTable, v: str, x) -> float:
    """Table value at the smallest grid budget >= ``x``."""
    if x < 0:
        return 0.0
    if v == t.dest:
        return 1.0
    j = math.ceil(x / t.delta)
    if j > t.eta:
        return 1.0 if v in t.rows else 0.0
    if j == 0:
        return 0.0
    return t.cell(v, j)


def _unit_lists(g) -> dict[str, list[tuple[str, CostDistribution]]]:
    out: dict[str, list] = {v: [] for v in g.base.vertices}
    if isinstance(g, UpdatedPaceGraph):
        for u in g.units.values():
            out[u.tail].append((u.head, u.total))
    else:
        for uid, kind, edges, tail, head, total in _forward_units(g):
            out[tail].append((head, total))
    return out


def minimax_cost(g, dest: str) -> dict[str, float]:
    """Least sum of unit maximum costs to ``dest`` (a budget that surely suffices)."""
    incoming: dict[str, list] = {v: [] for v in g.base.vertices}
    for v, lst in _unit_lists(g).items():
        for head, total in lst:
            incoming[head].append((v, total.max))
    best = {dest: 0}
    heap = [(0, dest)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > best.get(v, INF):
            continue
        for u, w in incoming[v]:
            nd = d + w
            if nd < best.get(u, INF):
                best[u] = nd
                heapq.heappush(heap, (nd, u))
    return best


def auto_eta(g, dest: str, delta: int, m: MinCostMap, safety: int = 3) -> int:
    finite = [c for c in m.get_min.values() if c < INF]
    by_min = math.ceil(max(finite, default=0) * safety / delta)
    by_max = math.ceil(max(minimax_cost(g, dest).values(), default=0) / delta)
    return max(1, by_min, by_max)


def build_table(g, dest: str, delta: int, eta: int | None, m: MinCostMap, *,
                max_sweeps: int = 200, tol: float = 1e-13) -> HeuristicTable:
    """Budget-specific heuristic table for ``dest``.

    ``g`` supplies the units leaving each vertex; pass the V-path closure
    (:class:`UpdatedPaceGraph`) so that runs of overlapping T-paths are
    represented by their assembled totals.  Columns are filled in ascending
    budget order.  A lookup that rounds up into the column being filled is
    resolved by Gauss-Seidel sweeps started from 1, which approach the fixed
    point from above, so stopping early stays admissible.
    """
    if delta < 1:
        raise ValueError(f"delta must be >= 1, got {delta}")
    if eta is None:
        eta = auto_eta(g, dest, delta, m)
    units = _unit_lists(g)
    reach = {v for v in g.base.vertices if m[v] < INF}
    if dest not in reach:
        raise GraphError(f"destination {dest} not in graph")
    lidx = {v: max(1, math.ceil(m[v] / delta)) for v in reach}
    # vals[v][j] for j in 0..eta; column 0 is budget 0
    vals: dict[str, list[float]] = {v: [0.0] * (eta + 1) for v in reach if v != dest}
    saturated: dict[str, int] = {}
    # only units into reachable vertices matter
    units = {v: [(z, w) for z, w in units[v] if z in reach] for v in vals}

    for j in range(1, eta + 1):
        x = j * delta
        active = [v for v in vals if v not in saturated and lidx[v] <= j]
        if not active:
            continue
        cur = {v: 1.0 for v in active}

        def look(z: str, y: int) -> float:
            if y < 0:
                return 0.0
            if z == dest:
                return 1.0
            jj = -(-y // delta)
            if jj > eta:
                return 1.0
            if jj == 0 or jj < lidx[z]:
                return 0.0
            sat = saturated.get(z)
            if sat is not None and jj >= sat:
                return 1.0
            if jj < j:
                return vals[z][jj]
            # same column, still being solved
            return cur.get(z, 0.0)

        for _ in range(max_sweeps):
            change = 0.0
            for v in active:
                best = 0.0
                for z, w in units[v]:
                    h = 0.0
                    for c, p in zip(w.costs, w.probs):
                        if c > x:
                            break
                        h += p * look(z, x - c)
                    if h > best:
                        best = h
                        if best >= 1.0:
                            break
                d = cur[v] - best
                if d > change:
                    change = d
                cur[v] = best
            if change <= tol:
                break
        for v in active:
            val = max(cur[v], vals[v][j - 1])
            if val >= 1.0 - ONE_TOL:
                val = 1.0
                saturated[v] = j
            vals[v][j] = val

    rows = {}
    for v, col in vals.items():
        if v not in saturated:
            raise GraphError(
                f"horizon too small: U({v}, {eta * delta}) = {col[eta]:.6g} < 1 for dest {dest}")
        l, s = lidx[v], saturated[v]
        rows[v] = (l * delta, s * delta, tuple(col[l:s + 1]))
    return HeuristicTable(dest, delta, eta, rows)


def binary_table(m: MinCostMap, delta: int, eta: int) -> HeuristicTable:
    """The binary heuristic laid out on a budget grid."""
    rows = {}
    for v, c in m.get_min.items():
        if v == m.dest or c == INF:
            continue
        l = max(1, math.ceil(c / delta)) * delta
        rows[v] = (l, l, (1.0,))
    return HeuristicTable(m.dest, delta, eta, rows)


class Heuristic:
    """U(v, x) and getMin(v) for one destination.  The base class is U = 1."""

    name = "none"

    def __init__(self, dest: str):
        self.dest = dest

    def u(self, v: str, x) -> float:
        return 1.0 if x >= 0 else 0.0

    def get_min(self, v: str) -> float:
        return 0


class BinaryHeuristic(Heuristic):
    name = "binary"

    def __init__(self, m: MinCostMap):
        super().__init__(m.dest)
        self.m = m

    def u(self, v: str, x) -> float:
        return 1.0 if x >= self.m[v] else 0.0

    def get_min(self, v: str) -> float:
        return self.m[v]


class TableHeuristic(Heuristic):
    name = "table"

    def __init__(self, table: HeuristicTable, m: MinCostMap):
        super().__init__(table.dest)
        self.table = table
        self.m = m

    def u(self, v: str, x) -> float:
        return lookup_U(self.table, v, x)

    def get_min(self, v: str) -> float:
        return self.m[v]


def make_heuristic(g, dest: str, kind: str, *, delta: int = 1, eta: int | None = None,
                   tpaths: bool = True) -> Heuristic:
    """Build a heuristic by name: ``none``, ``binary`` or ``table``."""
    if kind == "none":
        return Heuristic(dest)
    rg = reverse(g, include_tpaths=tpaths)
    m = shortest_path_tree(rg, dest)
    if kind == "binary":
        return BinaryHeuristic(m)
    if kind == "table":
        return TableHeuristic(build_table(g, dest, delta, eta, m), m)
    raise ValueError(f"unknown heuristic kind {kind!r}")

"""Brute-force ground truth: enumerate simple paths and evaluate each exactly."""

from __future__ import annotations

from dataclasses import dataclass, field

from .dist import CostDistribution, prob_within
from .graph import GraphError, PaceGraph, RoadGraph, path_distribution

PATH_GUARD = 100_000


class OracleError(GraphError):
    pass


def enumerate_paths(g: RoadGraph, s: str, d: str, max_edges: int, *,
                    guard: int = PATH_GUARD) -> list[tuple[str, ...]]:
    """All vertex-simple paths from ``s`` to ``d`` with at most ``max_edges`` edges.

    Paths come back sorted by their edge-id tuples.
    """
    if max_edges < 1:
        raise ValueError("max_edges must be >= 1")
    if s == d:
        return [()]
    found: list[tuple[str, ...]] = []
    path: list[str] = []
    on_path = {s}

    def walk(v: str):
        if len(path) >= max_edges:
            return
        for e in g.out_edges[v]:
            w = e.head
            if w in on_path:
                continue
            path.append(e.id)
            if w == d:
                found.append(tuple(path))
                if len(found) > guard:
                    raise OracleError("instance too large for oracle")
            else:
                on_path.add(w)
                walk(w)
                on_path.discard(w)
            path.pop()

    walk(s)
    found.sort()
    return found


@dataclass
class OracleResult:
    best_path: tuple[str, ...] | None
    best_probability: float
    table: list[tuple[tuple[str, ...], CostDistribution, float]] = field(repr=False)

    def to_tsv(self) -> str:
        lines = []
        for path, dist, p in self.table:
            lines.append(f"{','.join(path) or '-'}\t{p:.9f}\t{dist.to_text()}")
        return "\n".join(lines) + ("\n" if lines else "")


def exact_best(g: PaceGraph, q, max_edges: int | None = None, *,
               guard: int = PATH_GUARD) -> OracleResult:
    """Best arrival probability over all simple paths, each evaluated by assembly."""
    if max_edges is None:
        max_edges = max(1, len(g.base.vertices))
    paths = enumerate_paths(g.base, q.source, q.dest, max_edges, guard=guard)
    table = []
    best, best_p = None, 0
    for p in paths:
        dist = path_distribution(p, g)
        prob = prob_within(dist, q.budget)
        table.append((p, dist, prob))
        if best is None or prob > best_p:
            best, best_p = p, prob
    return OracleResult(best, best_p, table)


def best_from(g: PaceGraph, v: str, d: str, x, max_edges: int | None = None,
              paths: list | None = None) -> float:
    """Exact max probability of reaching ``d`` from ``v`` within ``x``."""
    if v == d:
        return 1
    if paths is None:
        paths = enumerate_paths(g.base, v, d, max_edges or len(g.base.vertices))
    return max((prob_within(path_distribution(p, g), x) for p in paths), default=0)

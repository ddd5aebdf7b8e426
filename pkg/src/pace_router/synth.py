"""Synthetic road networks and trajectories with controllable cost dependency.

Each edge has a free-flow cost and a congested cost.  A trajectory draws one
shared uniform variate; with probability ``dependency`` an edge reuses it to
decide congestion, otherwise the edge draws its own.  Strength 1 makes all
edges of a trajectory congest together, strength 0 makes them independent.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .dist import CostDistribution
from .graph import Edge, PaceGraph, RoadGraph, TPath, Trajectory, extract_tpaths


@dataclass(frozen=True)
class SyntheticSpec:
    vertices: int = 12
    degree: int = 3                  # nearest neighbours linked from each vertex
    routes: int = 3                  # seeded frequently travelled paths
    route_len: tuple[int, int] = (3, 5)
    dependency: float = 1.0
    trajectories: int = 1000
    route_share: float = 0.8         # fraction of trajectories following a route
    walk_len: tuple[int, int] = (2, 4)
    base_cost: tuple[int, int] = (5, 20)
    slowdown: float = 0.5            # congested cost = base * (1 + slowdown)
    congestion: tuple[float, float] = (0.1, 0.4)
    noise: int = 0                   # uniform integer jitter added per edge
    stratified: bool = False         # exact congestion frequencies per route
    periods: dict = field(default_factory=lambda: {"all": 1.0})

    def __post_init__(self):
        if self.vertices < 2 or self.trajectories < 1 or self.routes < 0 or self.degree < 1:
            raise ValueError("vertex, degree and trajectory counts must be positive")
        if not 0 <= self.dependency <= 1:
            raise ValueError("dependency strength must lie in [0, 1]")


@dataclass
class EdgeModel:
    base: int
    congested: int
    p: float


def _geometric_graph(spec: SyntheticSpec, rng: random.Random):
    names = [f"v{i}" for i in range(spec.vertices)]
    coords = {v: (rng.random(), rng.random()) for v in names}
    lo, hi = spec.base_cost
    pairs = set()
    for v in names:
        x, y = coords[v]
        near = sorted((math.hypot(x - coords[w][0], y - coords[w][1]), w) for w in names if w != v)
        for _, w in near[:spec.degree]:
            pairs.add((v, w))
            if rng.random() < 0.7:
                pairs.add((w, v))
    edges, models = [], {}
    for n, (a, b) in enumerate(sorted(pairs, key=lambda ab: (int(ab[0][1:]), int(ab[1][1:]))), 1):
        eid = f"e{n}"
        edges.append(Edge(eid, a, b))
        d = math.hypot(coords[a][0] - coords[b][0], coords[a][1] - coords[b][1])
        base = lo + round((hi - lo) * min(1.0, d / 0.5))
        cong = base + max(1, round(base * spec.slowdown))
        models[eid] = EdgeModel(base, cong, rng.uniform(*spec.congestion))
    weights = {e.id: CostDistribution.point(models[e.id].base) for e in edges}
    return RoadGraph(names, edges, weights, coords=coords), models


def _random_walk(g: RoadGraph, rng: random.Random, length: int, start: str | None = None):
    for _ in range(50):
        v = start or rng.choice(g.vertices)
        seen = {v}
        path = []
        while len(path) < length:
            options = [e for e in g.out_edges[v] if e.head not in seen]
            if not options:
                break
            e = rng.choice(options)
            path.append(e.id)
            seen.add(e.head)
            v = e.head
        if len(path) == length:
            return tuple(path)
    return tuple(path)


def _cost(m: EdgeModel, u: float, p_scale: float, noise: int, rng: random.Random) -> int:
    c = m.congested if u < min(1.0, m.p * p_scale) else m.base
    if noise:
        c += rng.randint(-noise, noise)
    return max(1, c)


def generate_synthetic(spec: SyntheticSpec, seed: int):
    """Reproducible ``(RoadGraph, trajectories)``; edge weights start deterministic."""
    rng = random.Random(seed)
    g, models = _geometric_graph(spec, rng)
    routes = []
    for _ in range(spec.routes):
        k = rng.randint(*spec.route_len)
        r = _random_walk(g, rng, k)
        if len(r) >= 2:
            routes.append(r)
    tags = sorted(spec.periods)
    plan = []
    for _ in range(spec.trajectories):
        tag = rng.choice(tags)
        if routes and rng.random() < spec.route_share:
            plan.append((tag, rng.randrange(len(routes))))
        else:
            plan.append((tag, None))
    shared: dict[int, float] = {}
    if spec.stratified:
        by_route: dict[int, list[int]] = {}
        for i, (_, r) in enumerate(plan):
            if r is not None:
                by_route.setdefault(r, []).append(i)
        for r, idx in sorted(by_route.items()):
            us = [(j + 0.5) / len(idx) for j in range(len(idx))]
            rng.shuffle(us)
            shared.update(zip(idx, us))
    trajs = []
    for i, (tag, r) in enumerate(plan):
        if r is None:
            path = _random_walk(g, rng, rng.randint(*spec.walk_len))
            if not path:
                continue
        else:
            path = routes[r]
        u = shared.get(i, None)
        if u is None:
            u = rng.random()
        scale = spec.periods[tag]
        steps = []
        for eid in path:
            v = u if rng.random() < spec.dependency else rng.random()
            steps.append((eid, _cost(models[eid], v, scale, spec.noise, rng)))
        trajs.append(Trajectory(tuple(steps), tag))
    return g, trajs


# --- random instances for verification ------------------------------------

def random_instance(seed: int, *, vertices: tuple[int, int] = (8, 14), max_tpaths: int = 10,
                    tau: int = 20, chain: bool = False) -> PaceGraph:
    """A small PACE graph with at most ``max_tpaths`` T-paths.

    With ``chain`` the seeded routes are long and T-paths are capped at two
    edges, so consecutive T-paths overlap and V-path chains form.
    """
    rng = random.Random(10_000 + seed)
    n = rng.randint(*vertices)
    spec = SyntheticSpec(
        vertices=n,
        degree=rng.choice((2, 3)),
        routes=rng.randint(2, 3) if chain else rng.randint(1, 4),
        route_len=(4, 6) if chain else (2, 4),
        dependency=rng.choice((0.0, 0.5, 1.0)),
        trajectories=300,
        route_share=0.85,
        walk_len=(1, 3),
        base_cost=(3, 12),
        slowdown=rng.choice((0.3, 0.6, 1.0)),
        noise=rng.choice((0, 0, 1)),
    )
    g, trajs = generate_synthetic(spec, seed)
    pg = extract_tpaths(trajs, g, tau, period_tag="all", max_len=2 if chain else 3)
    tps = sorted(pg.tpaths.values(), key=lambda t: t.id)
    if len(tps) > max_tpaths:
        keep = rng.sample(tps, max_tpaths)
        tps = sorted(keep, key=lambda t: t.id)
    # renumber so ids stay dense
    tps = [TPath(f"T{i}", t.edges, t.joint, t.total, t.support) for i, t in enumerate(tps, 1)]
    return PaceGraph(pg.base, tps, "all")


def random_queries(g: PaceGraph, seed: int, count: int, *, min_hops: int = 2):
    """``count`` (source, dest) pairs with dest reachable in at least ``min_hops`` edges."""
    from collections import deque

    rng = random.Random(20_000 + seed)
    verts = list(g.base.vertices)
    out = []
    for _ in range(200 * count):
        if len(out) == count:
            break
        s = rng.choice(verts)
        hops = {s: 0}
        dq = deque([s])
        while dq:
            v = dq.popleft()
            for e in g.base.out_edges[v]:
                if e.head not in hops:
                    hops[e.head] = hops[v] + 1
                    dq.append(e.head)
        far = [v for v, h in hops.items() if h >= min_hops]
        if far:
            out.append((s, rng.choice(sorted(far))))
    return out

from fractions import Fraction as F

import pytest

from pace_router.dist import CostDistribution, JointDistribution
from pace_router.graph import Edge, PaceGraph, RoadGraph, TPath

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str):
    ACCEPTANCE[n] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def D(mass):
    return CostDistribution(mass)


@pytest.fixture
def two_routes():
    """Two parallel office-to-airport routes: a fast but risky one and a steady one."""
    pa = D({40: F(1, 2), 50: F(1, 5), 60: F(1, 5), 70: F(1, 10)})
    pb = D({50: F(4, 5), 60: F(1, 5)})
    g = RoadGraph(["office", "airport"],
                  [Edge("PA", "office", "airport"), Edge("PB", "office", "airport")],
                  {"PA": pa, "PB": pb})
    return PaceGraph(g)


def chain_graph(k: int, *, extra_tail: bool = False):
    """Path v0 -> ... -> vk with T-paths over every consecutive edge pair.

    Each pair joint is perfectly correlated: both edges 10 with 0.8, both 15
    with 0.2.
    """
    verts = [f"v{i}" for i in range(k + 1)]
    edges = [Edge(f"e{i + 1}", verts[i], verts[i + 1]) for i in range(k)]
    w = D({10: 0.8, 15: 0.2})
    weights = {e.id: w for e in edges}
    if extra_tail:
        verts.append("x")
        edges.append(Edge("e7", verts[k], "x"))
        weights["e7"] = D({5: 1.0})
    base = RoadGraph(verts, edges, weights)
    tps = []
    for i in range(k - 1):
        ids = (edges[i].id, edges[i + 1].id)
        j = JointDistribution(ids, {(10, 10): 0.8, (15, 15): 0.2})
        tps.append(TPath.from_joint(f"p{i + 1}", j, 100))
    return PaceGraph(base, tps)


@pytest.fixture
def overlap_chain():
    """Overlapping chain: T-paths p1=<e1,e2>, p2=<e2,e3>, p3=<e3,e4> plus e5 and a side edge e7."""
    verts = ["v0", "v1", "v2", "v3", "v4", "v5", "x"]
    edges = [Edge("e1", "v0", "v1"), Edge("e2", "v1", "v2"), Edge("e3", "v2", "v3"),
             Edge("e4", "v3", "v4"), Edge("e5", "v4", "v5"), Edge("e7", "v3", "x")]
    w = D({10: 0.8, 15: 0.2})
    weights = {e.id: w for e in edges}
    weights["e7"] = D({5: 0.5, 6: 0.5})
    base = RoadGraph(verts, edges, weights)
    joint = {(10, 10): 0.7, (15, 15): 0.2, (10, 15): 0.1}
    tps = [TPath.from_joint(f"p{i}", JointDistribution(ids, joint), 100)
           for i, ids in enumerate([("e1", "e2"), ("e2", "e3"), ("e3", "e4")], 1)]
    return PaceGraph(base, tps)


@pytest.fixture
def conflict():
    """Reversed-search conflict: edges sum to 13, the T-path over them costs at least 15."""
    base = RoadGraph(["v5", "v6", "vd"], [Edge("e6", "v5", "v6"), Edge("e8", "v6", "vd")],
                     {"e6": D({9: 1.0}), "e8": D({4: 0.5, 5: 0.5})})
    j = JointDistribution(("e6", "e8"), {(10, 5): 0.5, (11, 6): 0.5})
    return base, TPath.from_joint("p4", j, 60)

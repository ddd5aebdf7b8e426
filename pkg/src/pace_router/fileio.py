"""Line-oriented text formats.

Blank lines and lines starting with ``#`` are ignored everywhere.

graph / PACE graph::

    V <id> [<x> <y>]
    E <id> <from> <to> <cost:prob,cost:prob,...>
    T <id> <support> <e1,e2,...> <c1,c2:prob;c1,c2:prob;...>

trajectories::

    <period_tag> <edge:cost> <edge:cost> ...

unit store (V-path closure, totals only)::

    U <id> <T|V> <e1,e2,...> <cost:prob,...>

heuristic cache::

    D <dest> <delta> <eta>
    M <dest> <vertex> <getMin>
    H <dest> <vertex> <l> <s> <v_l,...,v_s>

queries::

    <source> <dest> <departure_time> <budget>
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, TextIO

from .dist import CostDistribution, JointDistribution
from .graph import Edge, GraphError, PaceGraph, RoadGraph, TPath, Trajectory
from .heuristics import HeuristicTable, MinCostMap
from .router import Query, RouteResult
from .vpaths import TPATH, VPATH, Unit, UpdatedPaceGraph


class FormatError(ValueError):
    pass


def _lines(src):
    if isinstance(src, (str, Path)):
        with open(src) as fh:
            text = fh.read()
    else:
        text = src.read()
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield n, line.split()


def _fail(n, msg):
    raise FormatError(f"line {n}: {msg}")


def read_pace(src, period_tag: str = "all") -> PaceGraph:
    """Read ``V``/``E``/``T`` lines.  A plain graph file yields no T-paths."""
    verts, coords, edges, weights, tps = [], {}, [], {}, []
    for n, f in _lines(src):
        try:
            if f[0] == "V" and len(f) in (2, 4):
                verts.append(f[1])
                if len(f) == 4:
                    coords[f[1]] = (float(f[2]), float(f[3]))
            elif f[0] == "E" and len(f) == 5:
                edges.append(Edge(f[1], f[2], f[3]))
                weights[f[1]] = CostDistribution.from_text(f[4])
            elif f[0] == "T" and len(f) == 5:
                joint = JointDistribution.from_text(f[3].split(","), f[4])
                tps.append(TPath.from_joint(f[1], joint, int(f[2])))
            else:
                _fail(n, f"unrecognised record {' '.join(f)!r}")
        except (ValueError, KeyError) as exc:
            if isinstance(exc, FormatError):
                raise
            _fail(n, str(exc))
    return PaceGraph(RoadGraph(verts, edges, weights, coords), tps, period_tag)


def read_graph(src) -> RoadGraph:
    return read_pace(src).base


def write_pace(g: PaceGraph | RoadGraph, out: TextIO):
    base = g.base if isinstance(g, PaceGraph) else g
    for v in base.vertices:
        if v in base.coords:
            x, y = base.coords[v]
            out.write(f"V {v} {x:.6f} {y:.6f}\n")
        else:
            out.write(f"V {v}\n")
    for e in base.edges.values():
        out.write(f"E {e.id} {e.tail} {e.head} {base.weights[e.id].to_text()}\n")
    if isinstance(g, PaceGraph):
        for t in sorted(g.tpaths.values(), key=lambda t: (len(t.edges), t.edges)):
            out.write(f"T {t.id} {t.support} {','.join(t.edges)} {t.joint.to_text()}\n")


def read_trajectories(src) -> list[Trajectory]:
    out = []
    for n, f in _lines(src):
        if len(f) < 2:
            _fail(n, "trajectory needs a period tag and at least one edge")
        steps = []
        for tok in f[1:]:
            eid, sep, cost = tok.rpartition(":")
            if not sep:
                _fail(n, f"bad step {tok!r}")
            try:
                steps.append((eid, float(cost)))
            except ValueError:
                _fail(n, f"bad cost in {tok!r}")
        out.append(Trajectory(tuple(steps), f[0]))
    return out


def write_trajectories(trajs: Iterable[Trajectory], out: TextIO):
    for t in trajs:
        out.write(t.period_tag + " " + " ".join(f"{e}:{c}" for e, c in t.steps) + "\n")


def write_units(gp: UpdatedPaceGraph, out: TextIO):
    for u in sorted(gp.units.values(), key=lambda u: (u.kind, len(u.edges), u.edges)):
        if u.kind in (TPATH, VPATH):
            out.write(f"U {u.id} {u.kind} {','.join(u.edges)} {u.total.to_text()}\n")


def read_units(src, base: RoadGraph, period_tag: str = "all") -> UpdatedPaceGraph:
    units = []
    for n, f in _lines(src):
        if f[0] != "U" or len(f) != 5 or f[2] not in (TPATH, VPATH):
            _fail(n, f"unrecognised record {' '.join(f)!r}")
        edges = tuple(f[3].split(","))
        try:
            verts = base.path_vertices(edges)
            units.append(Unit(f[1], f[2], edges, verts, CostDistribution.from_text(f[4])))
        except (GraphError, ValueError) as exc:
            _fail(n, str(exc))
    return UpdatedPaceGraph(base, units, period_tag)


def _num(x) -> str:
    if x == math.inf:
        return "inf"
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def write_heuristics(out: TextIO, m: MinCostMap, table: HeuristicTable | None = None):
    d = m.dest
    if table is not None:
        out.write(f"D {d} {table.delta} {table.eta}\n")
    for v in sorted(m.get_min):
        out.write(f"M {d} {v} {_num(m.get_min[v])}\n")
    if table is not None:
        for v in sorted(table.rows):
            l, s, vals = table.rows[v]
            out.write(f"H {d} {v} {l} {s} {','.join(repr(float(x)) for x in vals)}\n")


def read_heuristics(src) -> dict[str, tuple[MinCostMap, HeuristicTable | None]]:
    """Heuristic cache records grouped by destination."""
    mins: dict[str, dict] = {}
    grids: dict[str, tuple[int, int]] = {}
    rows: dict[str, dict] = {}
    for n, f in _lines(src):
        try:
            if f[0] == "D" and len(f) == 4:
                grids[f[1]] = (int(f[2]), int(f[3]))
            elif f[0] == "M" and len(f) == 4:
                mins.setdefault(f[1], {})[f[2]] = math.inf if f[3] == "inf" else int(f[3])
            elif f[0] == "H" and len(f) == 6:
                vals = tuple(float(x) for x in f[5].split(","))
                rows.setdefault(f[1], {})[f[2]] = (int(f[3]), int(f[4]), vals)
            else:
                _fail(n, f"unrecognised record {' '.join(f)!r}")
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            _fail(n, str(exc))
    out = {}
    for d, gm in mins.items():
        table = None
        if d in grids:
            table = HeuristicTable(d, grids[d][0], grids[d][1], rows.get(d, {}))
        out[d] = (MinCostMap(d, gm), table)
    return out


def read_queries(src) -> list[Query]:
    out = []
    for n, f in _lines(src):
        if len(f) != 4:
            _fail(n, "expected <source> <dest> <departure_time> <budget>")
        try:
            out.append(Query(f[0], f[1], int(f[3]), float(f[2])))
        except ValueError as exc:
            _fail(n, str(exc))
    return out


def format_result(r: RouteResult, wall: float) -> str:
    path = ",".join(r.path) if r.path else "-"
    return f"{path}\t{float(r.probability):.9f}\t{r.explored}\t{wall:.6f}"

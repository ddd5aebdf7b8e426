"""Command-line front end (``pace-router``)."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

from .dist import DistributionError
from .evaluation import AgreementError, WorkloadSpec, bench, eval_kl, make_workload, ordered_map
from .fileio import (
    FormatError,
    format_result,
    read_graph,
    read_pace,
    read_queries,
    read_trajectories,
    read_units,
    write_heuristics,
    write_pace,
    write_trajectories,
    write_units,
)
from .graph import GraphError, extract_by_period, extract_tpaths
from .heuristics import build_table, reverse, shortest_path_tree
from .oracle import OracleError, exact_best
from .router import Engine, PeriodSchedule, Query
from .synth import SyntheticSpec, generate_synthetic
from .vpaths import build_vpaths

log = logging.getLogger("pace_router")


def _spec(text: str) -> SyntheticSpec:
    """A JSON file, inline JSON, or ``key=value`` pairs separated by commas."""
    p = Path(text)
    if p.is_file():
        raw = json.loads(p.read_text())
    elif text.lstrip().startswith("{"):
        raw = json.loads(text)
    else:
        raw = {}
        for part in filter(None, text.split(",")):
            k, _, v = part.partition("=")
            try:
                raw[k.strip()] = json.loads(v)
            except json.JSONDecodeError:
                raw[k.strip()] = v
    names = {f.name for f in dataclasses.fields(SyntheticSpec)}
    unknown = set(raw) - names
    if unknown:
        raise ValueError(f"unknown spec fields: {sorted(unknown)}")
    for k in ("route_len", "base_cost", "congestion", "walk_len"):
        if k in raw:
            raw[k] = tuple(raw[k])
    return SyntheticSpec(**raw)


def _pace_args(values: list[str]) -> dict[str, str]:
    """``tag=path`` pairs; a bare path is the ``all`` period."""
    out = {}
    for v in values:
        tag, sep, path = v.partition("=")
        if not sep:
            tag, path = "all", v
        out[tag] = path
    return out


def _load_engine(args) -> Engine:
    graphs = {tag: read_pace(path, tag) for tag, path in _pace_args(args.pace).items()}
    vgraphs = {}
    for spec in args.units or []:
        tag, sep, path = spec.partition("=")
        if not sep:
            tag, path = "all", spec
        vgraphs[tag] = read_units(path, graphs[tag].base, tag)
    schedule = PeriodSchedule.parse(args.periods) if args.periods else PeriodSchedule()
    return Engine(graphs, schedule, vgraphs=vgraphs, max_vpath_len=args.max_len)


def cmd_gen(args):
    spec = _spec(args.spec)
    g, trajs = generate_synthetic(spec, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "graph.txt", "w") as fh:
        write_pace(g, fh)
    with open(out / "trajectories.txt", "w") as fh:
        write_trajectories(trajs, fh)
    print(f"wrote {len(g.vertices)} vertices, {len(g.edges)} edges, {len(trajs)} trajectories to {out}")


def cmd_extract(args):
    g = read_graph(args.graph)
    trajs = read_trajectories(args.trajectories)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.period:
        graphs = {args.period: extract_tpaths(trajs, g, args.tau, period_tag=args.period,
                                              max_len=args.max_len)}
    else:
        graphs = extract_by_period(trajs, g, args.tau, max_len=args.max_len)
    for tag, pg in graphs.items():
        with open(out / f"{tag}.pace", "w") as fh:
            write_pace(pg, fh)
        print(f"{tag}\t{len(pg.tpaths)} T-paths\t{out / f'{tag}.pace'}")


def cmd_vpaths(args):
    pg = read_pace(args.pace)
    gp = build_vpaths(pg, max_len=args.max_len)
    with open(args.out, "w") as fh:
        write_units(gp, fh)
    print(f"{gp.count('T')} T-paths\t{gp.count('V')} V-paths\t{args.out}")


def cmd_heuristics(args):
    pg = read_pace(args.pace)
    gp = read_units(args.units, pg.base) if args.units else build_vpaths(pg, max_len=args.max_len)
    dests = list(pg.base.vertices) if args.all else [args.dest]
    if not args.all and not args.dest:
        raise ValueError("give --dest or --all")

    def one(d):
        m = shortest_path_tree(reverse(gp), d)
        t = build_table(gp, d, args.delta, args.eta, m) if args.kind == "table" else None
        return m, t

    with open(args.out, "w") as fh:
        for m, t in ordered_map(one, dests):
            write_heuristics(fh, m, t)
    print(f"{len(dests)} destinations\t{args.out}")


def cmd_route(args):
    engine = _load_engine(args)
    queries = read_queries(args.query_file)

    def one(q):
        t0 = time.perf_counter()
        r = engine.answer(q, args.variant, prune=not args.no_prune)
        return format_result(r, time.perf_counter() - t0)

    for line in ordered_map(one, queries):
        print(line)


def cmd_oracle(args):
    pg = read_pace(args.pace)
    res = exact_best(pg, Query(args.source, args.dest, args.budget), args.max_edges)
    sys.stdout.write(res.to_tsv())
    best = ",".join(res.best_path) if res.best_path else "-"
    print(f"# best\t{best}\t{float(res.best_probability):.9f}")


def cmd_eval_kl(args):
    g = read_graph(args.graph)
    trajs = read_trajectories(args.trajectories)
    rep = eval_kl(trajs, g, args.tau, args.folds, seed=args.seed, min_support=args.min_support)
    sys.stdout.write(rep.to_tsv())
    if args.summary:
        lo, hi = rep.ci_pace
        Path(args.summary).write_text(json.dumps({
            "tau": rep.tau, "folds": len(rep.folds), "mean_kl_pace": rep.mean_pace,
            "ci95_pace": [lo, hi], "mean_kl_edge": rep.mean_edge,
            "uncovered": sum(f.uncovered for f in rep.folds),
        }, indent=2) + "\n")


def cmd_bench(args):
    engine = _load_engine(args)
    g = next(iter(engine.graphs.values())).base
    spec = WorkloadSpec(pairs_per_bucket=args.pairs)
    wl = make_workload(g, spec, args.seed)
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    try:
        rep = bench(engine, wl, variants, prune=not args.no_prune)
    except AgreementError as exc:
        print(f"AGREEMENT FAILURE: {exc}", file=sys.stderr)
        for v, r in exc.results.items():
            print(f"{v}\t{format_result(r, 0)}", file=sys.stderr)
        return 3
    sys.stdout.write(rep.to_tsv())
    if args.summary:
        Path(args.summary).write_text(json.dumps(rep.summary(), indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pace-router", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen", help="generate a synthetic graph and trajectories")
    s.add_argument("--spec", default="{}", help="JSON file, inline JSON or key=value,...")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out-dir", default=".")
    s.set_defaults(fn=cmd_gen)

    s = sub.add_parser("extract-tpaths", help="mine T-paths from trajectories")
    s.add_argument("--graph", required=True)
    s.add_argument("--trajectories", required=True)
    s.add_argument("--tau", type=int, required=True)
    s.add_argument("--period")
    s.add_argument("--max-len", type=int)
    s.add_argument("--out-dir", default=".")
    s.set_defaults(fn=cmd_extract)

    s = sub.add_parser("build-vpaths", help="build the V-path unit store")
    s.add_argument("--pace", required=True)
    s.add_argument("--max-len", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_vpaths)

    s = sub.add_parser("heuristics", help="precompute getMin maps and heuristic tables")
    s.add_argument("--pace", required=True)
    s.add_argument("--units")
    s.add_argument("--kind", choices=("binary", "table"), default="table")
    s.add_argument("--delta", type=int, default=1)
    s.add_argument("--eta", type=int)
    s.add_argument("--max-len", type=int)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--dest")
    g.add_argument("--all", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_heuristics)

    for name, fn, hlp in (("route", cmd_route, "answer queries"),
                          ("bench", cmd_bench, "benchmark variants and check agreement")):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("--pace", action="append", required=True, help="[tag=]file, repeatable")
        s.add_argument("--units", action="append", help="[tag=]unit store, repeatable")
        s.add_argument("--periods", help="tag:start-end,... departure windows")
        s.add_argument("--max-len", type=int)
        s.add_argument("--no-prune", action="store_true")
        s.set_defaults(fn=fn)
        if name == "route":
            s.add_argument("--query-file", required=True)
            s.add_argument("--variant", default="V-BS-1")
        else:
            s.add_argument("--variants", default="T-None,V-BS-1")
            s.add_argument("--pairs", type=int, default=3)
            s.add_argument("--seed", type=int, default=0)
            s.add_argument("--summary")

    s = sub.add_parser("oracle", help="enumerate all paths and print the per-path table")
    s.add_argument("--pace", required=True)
    s.add_argument("--source", required=True)
    s.add_argument("--dest", required=True)
    s.add_argument("--budget", type=int, required=True)
    s.add_argument("--max-edges", type=int)
    s.set_defaults(fn=cmd_oracle)

    s = sub.add_parser("eval-kl", help="cross-validated KL evaluation")
    s.add_argument("--graph", required=True)
    s.add_argument("--trajectories", required=True)
    s.add_argument("--tau", type=int, required=True)
    s.add_argument("--folds", type=int, default=5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--min-support", type=int, default=5)
    s.add_argument("--summary")
    s.set_defaults(fn=cmd_eval_kl)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args) or 0
    except (GraphError, DistributionError, FormatError, OracleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: ``poolrelax <command> ...``.

Exit codes: 0 success, 2 some run stopped at a limit, 3 bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from .cuts import cut_pool_csv
from .globalsolve import MODES, build_relaxation, solve_global
from .hulllab import case_of, certify_case
from .instance import FIXTURES, GeneratorConfig, generate_random, load_fixture, read_instance, \
    write_instance
from .lpcore import mangling_csv, write_mps
from .pqmodel import build_pq
from .report import (RunRecord, SuiteReport, closed_gap, gap, run_suite,  # noqa: F401
                     shifted_geomean)

EXIT_OK, EXIT_FAIL, EXIT_LIMIT, EXIT_INPUT = 0, 1, 2, 3
DEFAULT_TIME_LIMIT = 1000.0

log = logging.getLogger("poolrelax")


class InputError(Exception):
    pass


def _load(spec: str):
    """A path to a .pool file, or the name of a bundled fixture."""
    path = Path(spec)
    try:
        if path.exists():
            return read_instance(path)
        if spec in FIXTURES:
            return load_fixture(spec)
    except (OSError, ValueError) as exc:
        raise InputError(f"{spec}: {exc}") from exc
    raise InputError(f"{spec}: no such file or fixture")


def _model(spec: str):
    inst = _load(spec)
    try:
        return build_pq(inst)
    except ValueError as exc:
        raise InputError(f"{spec}: {exc}") from exc


def _fmt(v: float) -> str:
    return "n/a" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.6f}"


def cmd_gen(args) -> int:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.count):
        cfg = GeneratorConfig(args.copies, args.edges, args.seed + k)
        try:
            inst = generate_random(cfg)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        path = out / f"{inst.name}.pool"
        write_instance(inst, path)
        print(f"{path}  nodes={len(inst.kinds)} arcs={len(inst.arcs)}")
    return EXIT_OK


def cmd_relax(args) -> int:
    model = _model(args.file)
    rel = build_relaxation(model, args.mode, backend=args.backend)
    print(f"mode={rel.mode} status={rel.status} bound={_fmt(rel.bound)} "
          f"seconds={rel.seconds:.3f}")
    if rel.report is not None:
        rep = rel.report
        print(f"rounds={rep.rounds} cuts={len(rep.cuts)} contexts={len(rel.contexts)}")
        if args.cuts_csv:
            Path(args.cuts_csv).write_text(cut_pool_csv(rep.cuts))
    return EXIT_OK if rel.status == "optimal" else EXIT_LIMIT


def cmd_solve(args) -> int:
    model = _model(args.file)
    trace = [] if args.trace else None
    res = solve_global(model, use_cjjj_root=(args.mode == "cjjj"), rel_gap=args.rel_gap,
                       node_limit=args.node_limit, time_limit=args.time_limit,
                       backend=args.backend, trace=trace)
    if args.trace:
        with open(args.trace, "w") as fh:
            for entry in trace:
                fh.write(json.dumps(entry) + "\n")
    print(f"status={res.status} objective={_fmt(res.objective)} bound={_fmt(res.bound)} "
          f"root_bound={_fmt(res.root_bound)} nodes={res.nodes} seconds={res.seconds:.3f}")
    if args.show_solution and res.incumbent:
        for k, v in sorted(res.incumbent.items()):
            if abs(v) > 1e-9:
                print(f"  {k} = {v:.6f}")
    return EXIT_OK if res.status == "optimal" else EXIT_LIMIT


def cmd_hull_check(args) -> int:
    rep = certify_case(case_of(args.case), args.draws, args.objectives, args.seed)
    if args.output:
        Path(args.output).write_text(rep.jsonl())
    worst = max((c.gap for c in rep.certificates), default=0.0)
    rate = rep.pass_rate(args.tol)
    print(f"case={rep.case} trials={len(rep.certificates)} pass_rate={100 * rate:.2f}% "
          f"worst_gap={worst:.3e} separation_failures={rep.failures} "
          f"seconds={rep.seconds:.1f}")
    return EXIT_OK if rate >= args.min_pass else EXIT_FAIL


def cmd_report(args) -> int:
    d = Path(args.dir)
    if not d.is_dir():
        raise InputError(f"{d}: not a directory")
    instances = []
    for path in sorted(d.glob("*.pool")):
        try:
            instances.append((path.stem, read_instance(path)))
        except (OSError, ValueError) as exc:
            raise InputError(f"{path}: {exc}") from exc
    rep: SuiteReport = run_suite(instances, modes=args.modes, solve=not args.root_only,
                                 time_limit=args.time_limit, rel_gap=args.rel_gap,
                                 workers=args.workers)
    print(rep.to_text(), end="")
    if args.csv:
        Path(args.csv).write_text(rep.to_csv())
    if any(r.status == "error" for r in rep.records):
        return EXIT_INPUT
    return EXIT_LIMIT if any(r.status == "limit" for r in rep.records) else EXIT_OK


def cmd_export(args) -> int:
    model = _model(args.file)
    rel = build_relaxation(model, args.mode)
    text = write_mps(rel.lp)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    if args.names_csv:
        Path(args.names_csv).write_text(mangling_csv(rel.lp))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="poolrelax",
                                description="Pooling relaxations, cuts and global solves.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate random instances")
    g.add_argument("--copies", type=int, required=True)
    g.add_argument("--edges", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=1, help="instances with seeds S, S+1, ...")
    g.add_argument("-o", "--output", required=True, help="output directory")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("relax", help="solve a root relaxation")
    r.add_argument("--mode", choices=MODES, default="pq")
    r.add_argument("--backend", choices=("simplex", "highs"), default="simplex")
    r.add_argument("--cuts-csv", help="write the cut pool as CSV")
    r.add_argument("file")
    r.set_defaults(func=cmd_relax)

    s = sub.add_parser("solve", help="global branch-and-bound")
    s.add_argument("--mode", choices=MODES, default="pq")
    s.add_argument("--rel-gap", type=float, default=1e-6)
    s.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT)
    s.add_argument("--node-limit", type=int)
    s.add_argument("--backend", choices=("simplex", "highs"), default="simplex")
    s.add_argument("--trace", help="write one JSON line per node")
    s.add_argument("--show-solution", action="store_true")
    s.add_argument("file")
    s.set_defaults(func=cmd_solve)

    h = sub.add_parser("hull-check", help="certify hull equivalence numerically")
    h.add_argument("--case", type=int, choices=(1, 2, 3), required=True)
    h.add_argument("--draws", type=int, default=100)
    h.add_argument("--objectives", type=int, default=100)
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--tol", type=float, default=1e-3)
    h.add_argument("--min-pass", type=float, default=0.995)
    h.add_argument("-o", "--output", help="JSON lines certificate file")
    h.set_defaults(func=cmd_hull_check)

    rp = sub.add_parser("report", help="run all instances in a directory and tabulate")
    rp.add_argument("--dir", required=True)
    rp.add_argument("--modes", nargs="+", choices=MODES, default=list(MODES))
    rp.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT)
    rp.add_argument("--rel-gap", type=float, default=1e-6)
    rp.add_argument("--root-only", action="store_true", help="bounds only, no branching")
    rp.add_argument("--workers", type=int, default=1)
    rp.add_argument("--csv", help="also write the tables as CSV")
    rp.set_defaults(func=cmd_report)

    e = sub.add_parser("export", help="write a relaxation LP")
    e.add_argument("--format", choices=("mps",), default="mps")
    e.add_argument("--mode", choices=MODES, default="pq")
    e.add_argument("-o", "--output")
    e.add_argument("--names-csv", help="original-to-MPS name table")
    e.add_argument("file")
    e.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

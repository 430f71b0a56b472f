"""Gap metrics, run records and benchmark tables."""

from __future__ import annotations

import csv
import io
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

from .globalsolve import MODES, build_relaxation, solve_global
from .instance import PoolingInstance
from .pqmodel import build_pq

NA = "n/a"


def gap(opt: float, bound: float) -> float:
    """Relative gap in percent of a lower bound w.r.t. a primal value (nan if opt is 0)."""
    if opt == 0 or not math.isfinite(opt) or not math.isfinite(bound):
        return math.nan
    return 100.0 * (opt - bound) / abs(opt)


def closed_gap(opt: float, bound_pq: float, bound_cjjj: float) -> float:
    """Percentage of the pq root gap recovered by the strengthened bound."""
    if not (math.isfinite(opt) and math.isfinite(bound_pq) and math.isfinite(bound_cjjj)):
        return math.nan
    if bound_pq >= opt:
        return math.nan
    return 100.0 * (bound_cjjj - bound_pq) / (opt - bound_pq)


def shifted_geomean(values, shift: float) -> float:
    vals = [float(v) for v in values]
    if not vals:
        return math.nan
    if any(v < 0 for v in vals):
        raise ValueError("shifted geometric mean needs nonnegative values")
    return math.exp(math.fsum(math.log(v + shift) for v in vals) / len(vals)) - shift


@dataclass
class RunRecord:
    instance: str
    mode: str
    root_bound: float
    best_primal: float = math.nan
    root_gap: float = math.nan
    closed_gap: float = math.nan
    nodes: int = 0
    seconds: float = 0.0
    status: str = "optimal"
    group: str = ""


def group_of(name: str) -> str:
    """Generated instances group by copies x added edges; the rest by name."""
    m = re.match(r"random_c(\d+)_e(\d+)_s\d+$", name)
    return f"c{m.group(1)}_e{m.group(2)}" if m else "fixtures"


def _run_one(args) -> list[RunRecord]:
    name, inst, modes, solve, time_limit, rel_gap, node_limit = args
    group = group_of(name)
    out = []
    try:
        model = build_pq(inst)
    except ValueError:
        return [RunRecord(name, m, math.nan, status="error", group=group) for m in modes]
    for mode in modes:
        try:
            t0 = time.perf_counter()
            relax = build_relaxation(model, mode)
            if solve:
                res = solve_global(model, use_cjjj_root=(mode == "cjjj"), rel_gap=rel_gap,
                                   time_limit=time_limit, node_limit=node_limit,
                                   relaxation=relax)
                out.append(RunRecord(name, mode, relax.bound, res.objective, nodes=res.nodes,
                                     seconds=time.perf_counter() - t0, status=res.status,
                                     group=group))
            else:
                out.append(RunRecord(name, mode, relax.bound, seconds=relax.seconds,
                                     status=relax.status, group=group))
        except Exception:  # noqa: BLE001 - recorded per instance, suite goes on
            out.append(RunRecord(name, mode, math.nan, status="error", group=group))
    return out


def fill_gaps(records: list[RunRecord], known_opt: dict[str, float] | None = None) -> None:
    """Set best_primal (best over modes and ``known_opt``), root and closed gaps."""
    known_opt = known_opt or {}
    by_inst: dict[str, list[RunRecord]] = {}
    for r in records:
        by_inst.setdefault(r.instance, []).append(r)
    for name, recs in by_inst.items():
        cands = [r.best_primal for r in recs if math.isfinite(r.best_primal)]
        if name in known_opt:
            cands.append(known_opt[name])
        opt = min(cands) if cands else math.nan
        pq = next((r for r in recs if r.mode == "pq"), None)
        cj = next((r for r in recs if r.mode == "cjjj"), None)
        for r in recs:
            r.best_primal = opt
            r.root_gap = gap(opt, r.root_bound)
        if pq is not None and cj is not None:
            cj.closed_gap = closed_gap(opt, pq.root_bound, cj.root_bound)


@dataclass
class GroupRow:
    group: str
    mode: str
    count: int
    limits: int
    mean_gap: float
    time_sgm: float
    nodes_sgm: float
    both_finished: int


@dataclass
class SuiteReport:
    records: list[RunRecord]
    groups: list[GroupRow]

    def record_table(self) -> tuple[list[str], list[list[str]]]:
        head = [f.name for f in fields(RunRecord)]
        return head, [[_cell(getattr(r, h)) for h in head] for r in self.records]

    def group_table(self) -> tuple[list[str], list[list[str]]]:
        head = [f.name for f in fields(GroupRow)]
        return head, [[_cell(getattr(g, h)) for h in head] for g in self.groups]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for head, rows in (self.record_table(), self.group_table()):
            w.writerow(head)
            w.writerows(rows)
            w.writerow([])
        return buf.getvalue()

    def to_text(self) -> str:
        parts = []
        for head, rows in (self.record_table(), self.group_table()):
            parts.append(_align(head, rows))
        return "\n\n".join(parts) + "\n"


def _cell(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return NA
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.4f}"
    return str(v)


def _align(head, rows) -> str:
    widths = [len(h) for h in head]
    for row in rows:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(head, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in rows]
    return "\n".join(lines)


def aggregate(records: list[RunRecord]) -> list[GroupRow]:
    """Per group and mode: limit counts, mean root gap, shifted geomeans.

    Node geomeans only use instances on which every mode finished.
    """
    out = []
    groups = sorted({r.group for r in records})
    for g in groups:
        recs = [r for r in records if r.group == g]
        finished = {}
        for r in recs:
            finished.setdefault(r.instance, []).append(r.status == "optimal")
        both = {n for n, oks in finished.items() if all(oks)}
        for mode in [m for m in MODES if any(r.mode == m for r in recs)]:
            mr = [r for r in recs if r.mode == mode]
            gaps = [r.root_gap for r in mr if math.isfinite(r.root_gap)]
            out.append(GroupRow(
                g, mode, len(mr), sum(r.status == "limit" for r in mr),
                math.fsum(gaps) / len(gaps) if gaps else math.nan,
                shifted_geomean([r.seconds for r in mr], 2.0),
                shifted_geomean([r.nodes for r in mr if r.instance in both], 100.0),
                len(both)))
    return out


def run_suite(instances: list[tuple[str, PoolingInstance]], modes=MODES, solve: bool = True,
              time_limit: float = 1000.0, rel_gap: float = 1e-6, node_limit: int | None = None,
              workers: int = 1, known_opt: dict[str, float] | None = None) -> SuiteReport:
    """Run every instance in every mode and tabulate."""
    jobs = [(n, inst, tuple(modes), solve, time_limit, rel_gap, node_limit)
            for n, inst in instances]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_run_one, jobs))
    else:
        chunks = [_run_one(j) for j in jobs]
    records = [r for c in chunks for r in c]
    fill_gaps(records, known_opt)
    return SuiteReport(records, aggregate(records))


def record_to_dict(r: RunRecord) -> dict:
    return asdict(r)

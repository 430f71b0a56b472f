"""Spatial branch-and-bound on the proportion variables of the pq-formulation.

Each node carries a box ``[q_lo, q_hi]`` per proportion; its relaxation is
the root LP (optionally strengthened by root cuts) with McCormick rows
rewritten for the node box.  Cuts found at the root are globally valid and
stay in every node LP.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field

from .aggregation import TripleContext, enumerate_triples
from .cuts import SeparationReport, add_linear_inequalities, separate_root
from .instance import INPUT
from .lpcore import Basis, LinearProgram, LpError, solve
from .pqmodel import (PqModel, apply_q_bounds, build_mccormick_lp, evaluate_pq,
                      point_from_flows, pq_objective, values_dict)

log = logging.getLogger(__name__)

MODES = ("pq", "cjjj")
FEAS_TOL = 1e-6
MIN_WIDTH = 1e-6

QBox = dict[tuple[str, str], tuple[float, float]]


@dataclass
class Relaxation:
    """Root relaxation: the LP, its aggregated contexts and separation log."""

    mode: str
    lp: LinearProgram
    contexts: list[TripleContext]
    bound: float
    status: str
    basis: Basis | None = None
    report: SeparationReport | None = None
    seconds: float = 0.0


def build_relaxation(model: PqModel, mode: str = "pq", backend: str = "simplex",
                     tol_conic: float = 1e-4, tol_yikes: float = 1e-5,
                     max_rounds: int = 200) -> Relaxation:
    """Build and solve the root relaxation.

    ``pq`` is the plain McCormick LP; ``cjjj`` adds the aggregated variables,
    the two linear families and runs the gradient-cut loop.
    """
    if mode not in MODES:
        raise ValueError(f"unknown relaxation mode {mode!r}")
    t0 = time.perf_counter()
    base = model.lp.copy()
    contexts: list[TripleContext] = []
    if mode == "cjjj":
        contexts = enumerate_triples(model, base)
    lp = build_mccormick_lp(model, base=base)
    if mode == "pq":
        sol = solve(lp, backend=backend)
        return Relaxation(mode, lp, contexts, sol.objective, sol.status, sol.basis,
                          None, time.perf_counter() - t0)
    for ctx in contexts:
        add_linear_inequalities(ctx, lp)
    rep = separate_root(lp, contexts, tol_conic, tol_yikes, max_rounds, backend)
    basis = rep.solution.basis if rep.solution is not None else None
    status = "optimal" if rep.solution is not None else rep.status
    return Relaxation(mode, lp, contexts, rep.objective, status, basis, rep,
                      time.perf_counter() - t0)


@dataclass
class BnbNode:
    q_bounds: QBox
    bound: float
    depth: int
    id: int = 0
    parent: int | None = None
    basis: Basis | None = None

    def __post_init__(self):
        for key, (lo, hi) in self.q_bounds.items():
            if lo > hi:
                raise ValueError(f"empty proportion box for {key}: [{lo}, {hi}]")


@dataclass
class GlobalResult:
    status: str                      # optimal | limit | infeasible
    objective: float                 # incumbent value (inf if none)
    bound: float                     # best dual bound
    incumbent: dict[str, float] | None
    nodes: int
    seconds: float
    root_bound: float
    separation_seconds: float = 0.0
    mode: str = "pq"
    trace: list[dict] = field(default_factory=list)

    @property
    def gap(self) -> float:
        if not math.isfinite(self.objective):
            return math.inf
        return (self.objective - self.bound) / max(abs(self.objective), 1e-10)


def propagate_proportions(model: PqModel, box: QBox) -> QBox | None:
    """Tighten boxes using ``sum_i q[i,l] = 1``; None if a pool box is empty."""
    out = dict(box)
    inst = model.instance
    for l in inst.pools:
        ins = inst.predecessors(l, INPUT)
        lo_sum = sum(out[i, l][0] for i in ins)
        hi_sum = sum(out[i, l][1] for i in ins)
        if lo_sum > 1 + 1e-12 or hi_sum < 1 - 1e-12:
            return None
        for i in ins:
            lo, hi = out[i, l]
            lo = max(lo, 1.0 - (hi_sum - hi))
            hi = min(hi, 1.0 - (lo_sum - lo))
            if lo > hi:
                if lo - hi > 1e-12:
                    return None
                lo = hi = 0.5 * (lo + hi)
            out[i, l] = (lo, hi)
    return out


def term_violations(model: PqModel, values) -> dict[tuple[str, str], float]:
    """Sum over outputs of |w - q x| per proportion variable."""
    viol: dict[tuple[str, str], float] = {}
    for t in model.bilinear:
        d = abs(values[t.w] - values[t.q] * values[t.x])
        viol[t.i, t.pool] = viol.get((t.i, t.pool), 0.0) + d
    return viol


def _fixed_q(model: PqModel, values, snap: float = 1e-7) -> QBox:
    """Normalized proportions from ``values``; entries below ``snap`` are zeroed."""
    inst = model.instance
    box = {}
    for l in inst.pools:
        ins = inst.predecessors(l, INPUT)
        q = [min(max(values[model.q_cols[i, l]], 0.0), 1.0) for i in ins]
        q = [0.0 if v < snap else v for v in q]
        tot = sum(q)
        q = [v / tot for v in q] if tot > 0 else [1.0 / len(ins)] * len(ins)
        for i, v in zip(ins, q):
            box[i, l] = (v, v)
    return box


class _Search:
    def __init__(self, model, relax, rel_gap, node_limit, time_limit, backend, trace):
        self.model = model
        self.relax = relax
        self.lp = relax.lp.copy()
        self.rel_gap = rel_gap
        self.node_limit = node_limit
        self.time_limit = time_limit
        self.backend = backend
        self.trace = trace
        self.best = math.inf
        self.best_point: dict[str, float] | None = None
        self.tried: set[tuple] = set()
        self.plain: LinearProgram | None = None

    def cutoff(self) -> float:
        if not math.isfinite(self.best):
            return math.inf
        return self.best - self.rel_gap * max(abs(self.best), 1e-10)

    def offer(self, flows, polish: bool = True) -> None:
        pt = point_from_flows(self.model, flows)
        if evaluate_pq(self.model, pt, FEAS_TOL):
            return
        obj = pq_objective(self.model, pt)
        if obj < self.best - 1e-12:
            self.best = obj
            self.best_point = pt
            log.debug("incumbent %.10g", obj)
            if polish:
                self.polish(pt)

    def polish(self, point, rounds: int = 20) -> None:
        """Alternate LPs with pool outflows fixed and with proportions fixed.

        Either restriction turns every ``w = q x`` into a linear equation, so
        each step stays feasible and never worsens the objective.
        """
        model = self.model
        for _ in range(rounds):
            before = self.best
            lp = self.relax.lp.copy()
            apply_q_bounds(lp, model, {k: (0.0, 1.0) for k in model.q_cols})
            for t in model.bilinear:
                v = point[t.x]
                lp.set_bounds(t.x, v, v)
                lp.add_row(f"fixx:{t.i}:{t.pool}:{t.j}", {t.w: 1.0, t.q: -v}, "=", 0.0)
            sol = solve(lp, backend=self.backend)
            if not sol.optimal:
                return
            vals = values_dict(lp, sol.x)
            box = _fixed_q(model, vals)
            sol = self.solve_box(box, None)
            if not sol.optimal:
                return
            vals = values_dict(self.lp, sol.x)
            self.offer(self.flows(vals), polish=False)
            if self.best > before - 1e-9 * max(1.0, abs(before)):
                break
            point = self.best_point
        self.slp()

    def slp(self, radius: float = 0.1, max_iter: int = 40) -> None:
        """Trust-region sequential LP on the incumbent.

        The products are linearized at the incumbent, the LP is solved with
        the proportions confined to a box of ``radius`` around their current
        values, and the new proportions are repaired by the fixed-q LP.
        Improvements are accepted, failures shrink the box.
        """
        model = self.model
        if self.plain is None:
            self.plain = build_mccormick_lp(model)
        lp = self.plain
        for _ in range(max_iter):
            if radius < 1e-7 or self.best_point is None:
                return
            pt = self.best_point
            box = {}
            for key, qc in model.q_cols.items():
                q0 = pt[qc]
                box[key] = (max(0.0, q0 - radius), min(1.0, q0 + radius))
            apply_q_bounds(lp, model, box)
            for t in model.bilinear:
                q0, x0 = pt[t.q], pt[t.x]
                coefs = {t.w: 1.0, t.x: -q0, t.q: -x0}
                tag = f"{t.i}:{t.pool}:{t.j}"
                lp.set_row(f"mc_lo1:{tag}", coefs, -q0 * x0)
                lp.set_row(f"mc_up1:{tag}", coefs, -q0 * x0)
            sol = solve(lp, backend=self.backend)
            before = self.best
            if sol.optimal:
                res = self.solve_box(_fixed_q(model, values_dict(lp, sol.x)), None)
                if res.optimal:
                    self.offer(self.flows(values_dict(self.lp, res.x)), polish=False)
            if self.best < before - 1e-9 * max(1.0, abs(before)):
                radius = min(2 * radius, 0.5)
            else:
                radius *= 0.25

    def solve_box(self, box: QBox, basis):
        apply_q_bounds(self.lp, self.model, box)
        try:
            sol = solve(self.lp, backend=self.backend, basis=basis)
        except LpError as exc:
            if self.backend == "highs":
                raise
            log.warning("%s; retrying with HiGHS", exc)
            sol = solve(self.lp, backend="highs")
        if sol.status not in ("optimal", "infeasible") and self.backend != "highs":
            log.warning("node LP ended with %s; retrying with HiGHS", sol.status)
            sol = solve(self.lp, backend="highs")
        return sol

    def heuristic(self, values, basis) -> None:
        """Fix proportions at the LP values (and at a copy with tiny values
        snapped to zero), solve the remaining LP and offer its flows."""
        for snap in (1e-7, 1e-3):
            box = _fixed_q(self.model, values, snap)
            key = tuple(round(v[0], 9) for v in box.values())
            if key in self.tried:
                continue
            self.tried.add(key)
            sol = self.solve_box(box, basis)
            if sol.optimal:
                vals = values_dict(self.lp, sol.x)
                self.offer(self.flows(vals))

    def flows(self, vals):
        return {a: vals[c] for a, c in self.model.x_cols.items()}


def solve_global(model: PqModel, use_cjjj_root: bool = False, rel_gap: float = 1e-6,
                 node_limit: int | None = None, time_limit: float = 1000.0,
                 backend: str = "simplex", trace: list | None = None,
                 relaxation: Relaxation | None = None) -> GlobalResult:
    """Solve the pq-formulation to ``rel_gap`` by branching on proportions.

    ``trace``, when given, receives one dict per processed node.  A prebuilt
    root ``relaxation`` may be passed to avoid repeating separation.
    """
    t0 = time.perf_counter()
    mode = "cjjj" if use_cjjj_root else "pq"
    relax = relaxation or build_relaxation(model, mode, backend)
    sep_seconds = relax.report.seconds if relax.report is not None else 0.0
    S = _Search(model, relax, rel_gap, node_limit, time_limit, backend, trace)

    root_box = propagate_proportions(model, {k: (0.0, 1.0) for k in model.q_cols})
    counter = itertools.count()
    heap: list[tuple[float, int, BnbNode]] = []
    if root_box is not None:
        root = BnbNode(root_box, -math.inf, 0, next(counter), None, relax.basis)
        heapq.heappush(heap, (root.bound, root.id, root))
    nodes = 0
    stuck = math.inf
    root_bound = math.nan
    status = "optimal"
    while heap:
        bound, _, node = heap[0]
        if bound >= S.cutoff():
            break
        if (node_limit is not None and nodes >= node_limit) or \
                time.perf_counter() - t0 > time_limit:
            status = "limit"
            break
        heapq.heappop(heap)
        nodes += 1
        sol = S.solve_box(node.q_bounds, node.basis)
        entry = {"node": node.id, "parent": node.parent, "depth": node.depth}
        if not sol.optimal:
            if sol.status != "infeasible":
                raise RuntimeError(f"node LP ended with status {sol.status}")
            entry.update(bound=None, status="infeasible")
            if trace is not None:
                trace.append(entry)
            continue
        lp_bound = max(sol.objective, node.bound)
        if node.depth == 0:
            root_bound = sol.objective
        vals = values_dict(S.lp, sol.x)
        viol = term_violations(model, vals)
        entry.update(bound=lp_bound)
        if max(viol.values(), default=0.0) <= FEAS_TOL:
            S.offer(S.flows(vals))
        S.heuristic(vals, sol.basis)
        if lp_bound >= S.cutoff():
            entry["status"] = "pruned"
            if trace is not None:
                trace.append(entry)
            continue
        cand = [(v, k) for k, v in viol.items()
                if v > FEAS_TOL and node.q_bounds[k][1] - node.q_bounds[k][0] > MIN_WIDTH]
        if not cand:
            # boxes too narrow to split; keep the node's bound in the result
            entry["status"] = "unbranchable"
            if trace is not None:
                trace.append(entry)
            S.offer(S.flows(vals))
            stuck = min(stuck, lp_bound)
            continue
        _, key = max(cand, key=lambda c: (c[0], c[1]))
        lo, hi = node.q_bounds[key]
        width = hi - lo
        split = min(max(vals[model.q_cols[key]], lo + 0.1 * width), hi - 0.1 * width)
        entry.update(status="branched", branch=model.q_cols[key], split=split)
        if trace is not None:
            trace.append(entry)
        for part in ((lo, split), (split, hi)):
            box = dict(node.q_bounds)
            box[key] = part
            box = propagate_proportions(model, box)
            if box is None:
                continue
            child = BnbNode(box, lp_bound, node.depth + 1, next(counter), node.id, sol.basis)
            heapq.heappush(heap, (child.bound, child.id, child))
    best_bound = min([b for b, _, _ in heap] + [S.best, stuck])
    if status == "optimal" and not math.isfinite(S.best):
        status = "infeasible" if not math.isfinite(stuck) else "limit"
    elif status == "optimal" and stuck < S.cutoff():
        status = "limit"
    seconds = time.perf_counter() - t0 + (sep_seconds if relaxation is not None else 0.0)
    if math.isnan(root_bound):
        root_bound = relax.bound
    return GlobalResult(status, S.best, best_bound, S.best_point, nodes, seconds,
                        root_bound, sep_seconds, mode, trace if trace is not None else [])


@dataclass(frozen=True)
class NodeStatistics:
    nodes: int
    seconds: float
    root_gap: float


def node_statistics(run: GlobalResult) -> NodeStatistics:
    """Node count, wall time (separation included) and root gap in percent."""
    if math.isfinite(run.objective) and run.objective != 0:
        rg = 100.0 * (run.objective - run.root_bound) / abs(run.objective)
    else:
        rg = math.nan
    return NodeStatistics(run.nodes, run.seconds, rg)

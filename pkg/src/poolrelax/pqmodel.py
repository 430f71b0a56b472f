"""pq-formulation of the pooling problem and its McCormick relaxation.

Column naming: ``x:i:j`` arc flows, ``q:i:l`` pool proportions and
``w:i:l:j`` path flows.  Row names carry the constraint family as prefix
(``inp_cap``, ``pool_cap``, ``out_cap``, ``prop``, ``balance``,
``quality``, ``pq_flow``, ``pq_cap``).  The bilinear equations
``w = q * x`` never enter the LP; they are kept in :attr:`PqModel.bilinear`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .instance import INPUT, PoolingInstance, validate
from .lpcore import EQ, GE, LE, LinearProgram


class ModelError(ValueError):
    pass


def xname(i: str, j: str) -> str:
    return f"x:{i}:{j}"


def qname(i: str, l: str) -> str:
    return f"q:{i}:{l}"


def wname(i: str, l: str, j: str) -> str:
    return f"w:{i}:{l}:{j}"


@dataclass(frozen=True)
class Bilinear:
    """The product term ``w[i,l,j] = q[i,l] * x[l,j]``."""

    i: str
    pool: str
    j: str
    cap: float  # upper bound on x[l,j] used by McCormick

    @property
    def w(self) -> str:
        return wname(self.i, self.pool, self.j)

    @property
    def q(self) -> str:
        return qname(self.i, self.pool)

    @property
    def x(self) -> str:
        return xname(self.pool, self.j)


@dataclass
class PqModel:
    instance: PoolingInstance
    lp: LinearProgram
    x_cols: dict[tuple[str, str], str]
    q_cols: dict[tuple[str, str], str]
    w_cols: dict[tuple[str, str, str], str]
    bilinear: list[Bilinear]
    rows: dict[str, list[str]] = field(default_factory=dict)

    def pool_inputs(self, pool: str) -> list[str]:
        return self.instance.predecessors(pool, INPUT)


def flow_bound(inst: PoolingInstance, pool: str, j: str) -> float:
    """Tightest available upper bound on ``x[pool, j]``."""
    cap = inst.arcs[pool, j].capacity
    if cap is not None:
        return min(cap, inst.node_capacity[pool], inst.node_capacity[j])
    return min(inst.node_capacity[pool], inst.node_capacity[j])


def pool_capacity(inst: PoolingInstance, pool: str) -> float:
    """Pool capacity, tightened by the sum of its outgoing flow bounds."""
    return min(inst.node_capacity[pool],
               sum(flow_bound(inst, pool, j) for j in inst.successors(pool)))


def build_pq(instance: PoolingInstance) -> PqModel:
    problems = validate(instance)
    if problems:
        raise ModelError("invalid instance: " + "; ".join(problems))
    inst = instance
    lp = LinearProgram(inst.name or "pq")
    rows: dict[str, list[str]] = {}

    def add(family, name, coefs, sense, rhs):
        lp.add_row(name, coefs, sense, rhs)
        rows.setdefault(family, []).append(name)

    x_cols, q_cols, w_cols = {}, {}, {}
    for (i, j), arc in inst.arcs.items():
        up = math.inf if arc.capacity is None else arc.capacity
        x_cols[i, j] = xname(i, j)
        lp.add_column(xname(i, j), 0.0, up, arc.cost)
    bilinear = []
    for l in inst.pools:
        for i in inst.predecessors(l, INPUT):
            q_cols[i, l] = qname(i, l)
            lp.add_column(qname(i, l), 0.0, 1.0)
        for j in inst.successors(l):
            cap = flow_bound(inst, l, j)
            if not math.isfinite(cap):
                raise ModelError(f"no finite bound derivable for flow {l}->{j}")
            for i in inst.predecessors(l, INPUT):
                w_cols[i, l, j] = wname(i, l, j)
                lp.add_column(wname(i, l, j), 0.0, math.inf)
                bilinear.append(Bilinear(i, l, j, cap))

    for i in inst.inputs:
        succ = inst.successors(i)
        if succ and math.isfinite(inst.node_capacity[i]):
            add("inp_cap", f"inp_cap:{i}", {xname(i, j): 1.0 for j in succ}, LE,
                inst.node_capacity[i])
    for l in inst.pools:
        if math.isfinite(inst.node_capacity[l]):
            add("pool_cap", f"pool_cap:{l}", {xname(l, j): 1.0 for j in inst.successors(l)},
                LE, inst.node_capacity[l])
    for j in inst.outputs:
        pred = inst.predecessors(j)
        if pred and math.isfinite(inst.node_capacity[j]):
            add("out_cap", f"out_cap:{j}", {xname(i, j): 1.0 for i in pred}, LE,
                inst.node_capacity[j])
    for l in inst.pools:
        add("prop", f"prop:{l}", {qname(i, l): 1.0 for i in inst.predecessors(l, INPUT)}, EQ, 1.0)
    for l in inst.pools:
        for i in inst.predecessors(l, INPUT):
            coefs = {xname(i, l): 1.0}
            for j in inst.successors(l):
                coefs[wname(i, l, j)] = -1.0
            add("balance", f"balance:{i}:{l}", coefs, EQ, 0.0)
    for j in inst.outputs:
        for k in inst.attributes:
            coefs: dict[str, float] = {}
            for src in inst.predecessors(j):
                if inst.kinds[src] == INPUT:
                    coefs[xname(src, j)] = inst.gamma(k, src, j)
                else:
                    for i in inst.predecessors(src, INPUT):
                        coefs[wname(i, src, j)] = inst.gamma(k, i, j)
            if coefs:
                add("quality", f"quality:{k}:{j}", coefs, LE, 0.0)
    for l in inst.pools:
        for j in inst.successors(l):
            coefs = {wname(i, l, j): 1.0 for i in inst.predecessors(l, INPUT)}
            coefs[xname(l, j)] = -1.0
            add("pq_flow", f"pq_flow:{l}:{j}", coefs, EQ, 0.0)
    for l in inst.pools:
        cap = pool_capacity(inst, l)
        for i in inst.predecessors(l, INPUT):
            coefs = {wname(i, l, j): 1.0 for j in inst.successors(l)}
            coefs[qname(i, l)] = -cap
            add("pq_cap", f"pq_cap:{i}:{l}", coefs, LE, 0.0)
    return PqModel(inst, lp, x_cols, q_cols, w_cols, bilinear, rows)


Q_SNAP = 1e-9


def mccormick_rows(term: Bilinear, q_lo: float = 0.0, q_hi: float = 1.0):
    """The four McCormick inequalities for ``w = q x`` over
    ``q in [q_lo, q_hi]``, ``x in [0, cap]`` as (suffix, coefs, sense, rhs).

    Bounds within ``Q_SNAP`` of 0 or 1 are widened to 0 or 1; every row then
    gets weaker, so validity holds while tiny coefficients disappear.
    """
    C = term.cap
    q_lo = 0.0 if q_lo < Q_SNAP else q_lo
    q_hi = 1.0 if q_hi > 1.0 - Q_SNAP else q_hi
    w, q, x = term.w, term.q, term.x
    return [
        ("lo1", {w: 1.0, x: -q_lo}, GE, 0.0),
        ("lo2", {w: 1.0, x: -q_hi, q: -C}, GE, -q_hi * C),
        ("up1", {w: 1.0, x: -q_hi}, LE, 0.0),
        ("up2", {w: 1.0, x: -q_lo, q: -C}, LE, -q_lo * C),
    ]


def build_mccormick_lp(model: PqModel,
                       q_bounds: Mapping[tuple[str, str], tuple[float, float]] | None = None,
                       base: LinearProgram | None = None) -> LinearProgram:
    """McCormick LP relaxation of the pq-formulation.

    ``q_bounds`` optionally narrows proportion boxes (branch-and-bound nodes);
    ``base`` lets callers start from an extended copy of ``model.lp`` (e.g.
    with aggregated columns and cuts).
    """
    lp = (base if base is not None else model.lp).copy()
    q_bounds = q_bounds or {}
    for (i, l), (lo, hi) in q_bounds.items():
        lp.set_bounds(qname(i, l), lo, hi)
    for term in model.bilinear:
        lo, hi = q_bounds.get((term.i, term.pool), (0.0, 1.0))
        for suffix, coefs, sense, rhs in mccormick_rows(term, lo, hi):
            coefs = {c: v for c, v in coefs.items() if v != 0.0}
            lp.add_row(f"mc_{suffix}:{term.i}:{term.pool}:{term.j}", coefs, sense, rhs)
    return lp


def apply_q_bounds(lp: LinearProgram, model: PqModel,
                   q_bounds: Mapping[tuple[str, str], tuple[float, float]]) -> None:
    """Rewrite, in place, the McCormick rows of ``lp`` for new proportion boxes."""
    for (i, l), (lo, hi) in q_bounds.items():
        lp.set_bounds(qname(i, l), lo, hi)
    for term in model.bilinear:
        box = q_bounds.get((term.i, term.pool))
        if box is None:
            continue
        for suffix, coefs, _, rhs in mccormick_rows(term, *box):
            lp.set_row(f"mc_{suffix}:{term.i}:{term.pool}:{term.j}", coefs, rhs)


# -- independent evaluator of the nonconvex formulation ----------------------

def point_from_flows(model: PqModel, x: Mapping[tuple[str, str], float]) -> dict[str, float]:
    """Complete arc flows into a full (x, q, w) point with ``w = q x`` exactly.

    Pools without inflow get uniform proportions.
    """
    inst = model.instance
    vals = {model.x_cols[a]: float(v) for a, v in x.items()}
    for a in inst.arcs:
        vals.setdefault(model.x_cols[a], 0.0)
    for l in inst.pools:
        ins = inst.predecessors(l, INPUT)
        total = sum(vals[xname(i, l)] for i in ins)
        for i in ins:
            vals[qname(i, l)] = vals[xname(i, l)] / total if total > 0 else 1.0 / len(ins)
    for t in model.bilinear:
        vals[t.w] = vals[t.q] * vals[t.x]
    return vals


def evaluate_pq(model: PqModel, values: Mapping[str, float], tol: float = 1e-6) -> list[str]:
    """Check a point against the nonconvex pq-formulation, written out
    directly from the instance (not via the LP rows)."""
    inst = model.instance
    v = values
    bad = []

    def chk(ok, msg):
        if not ok:
            bad.append(msg)

    for (i, j) in inst.arcs:
        f = v[xname(i, j)]
        chk(f >= -tol and f <= inst.arc_capacity(i, j) + tol, f"flow bound ({i},{j})")
    for n in inst.kinds:
        cap = inst.node_capacity[n]
        if inst.kinds[n] == INPUT or inst.kinds[n] == "pool":
            tot = sum(v[xname(n, j)] for j in inst.successors(n))
        else:
            tot = sum(v[xname(i, n)] for i in inst.predecessors(n))
        chk(tot <= cap + tol * max(1.0, cap), f"capacity {n}")
    for l in inst.pools:
        ins = inst.predecessors(l, INPUT)
        chk(abs(sum(v[qname(i, l)] for i in ins) - 1.0) <= tol, f"proportions {l}")
        for i in ins:
            q = v[qname(i, l)]
            chk(-tol <= q <= 1 + tol, f"q bound ({i},{l})")
            for j in inst.successors(l):
                chk(abs(v[wname(i, l, j)] - q * v[xname(l, j)]) <= tol, f"w=qx ({i},{l},{j})")
            chk(abs(v[xname(i, l)] - sum(v[wname(i, l, j)] for j in inst.successors(l))) <= tol,
                f"balance ({i},{l})")
    for j in inst.outputs:
        for k in inst.attributes:
            excess = 0.0
            for src in inst.predecessors(j):
                if inst.kinds[src] == INPUT:
                    excess += inst.gamma(k, src, j) * v[xname(src, j)]
                else:
                    for i in inst.predecessors(src, INPUT):
                        excess += inst.gamma(k, i, j) * v[qname(i, src)] * v[xname(src, j)]
            chk(excess <= tol * max(1.0, inst.node_capacity[j] if math.isfinite(
                inst.node_capacity[j]) else 1.0), f"quality ({k},{j})")
    return bad


def pq_objective(model: PqModel, values: Mapping[str, float]) -> float:
    return float(sum(a.cost * values[xname(i, j)] for (i, j), a in model.instance.arcs.items()))


def values_dict(lp: LinearProgram, x: np.ndarray) -> dict[str, float]:
    return {nm: float(x[k]) for k, nm in enumerate(lp.col_names)}

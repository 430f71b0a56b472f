"""Solver front end: dispatches to the embedded simplex or to HiGHS."""

from __future__ import annotations

import math

import numpy as np

from .lp import EQ, GE, LE, Basis, LinearProgram, LpError, LpSolution
from .simplex import solve_simplex

BACKENDS = ("simplex", "highs")


def solve(lp: LinearProgram, backend: str = "simplex", basis: Basis | None = None,
          max_iter: int = 10**6) -> LpSolution:
    """Minimize ``lp``.

    ``backend="simplex"`` (default) runs the embedded revised simplex and
    accepts a warm-start ``basis``.  ``backend="highs"`` delegates to
    ``scipy.optimize.linprog`` and is used as a speed option and as an
    independent cross-check.
    """
    if backend == "simplex":
        sol = solve_simplex(lp, basis=basis, max_iter=max_iter)
    elif backend == "highs":
        sol = _solve_highs(lp)
    else:
        raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")
    if sol.optimal:
        viol = lp.max_violation(sol.x)
        if viol > 1e-7:
            raise LpError(f"{lp.name}: solver returned a point violating constraints by {viol:.3g}")
    return sol


def _solve_highs(lp: LinearProgram) -> LpSolution:
    from scipy.optimize import linprog
    from scipy.sparse import coo_matrix

    n = lp.num_cols
    ub_rows, ub_rhs, ub_sign, eq_rows, eq_rhs = [], [], [], [], []
    for i, (s, b) in enumerate(zip(lp.sense, lp.rhs)):
        if s == EQ:
            eq_rows.append(i)
            eq_rhs.append(b)
        else:
            ub_rows.append(i)
            sign = 1.0 if s == LE else -1.0
            ub_sign.append(sign)
            ub_rhs.append(sign * b)

    def block(rows, signs=None):
        r, c, v = [], [], []
        for k, i in enumerate(rows):
            sg = 1.0 if signs is None else signs[k]
            for j, a in lp.rows[i].items():
                r.append(k)
                c.append(j)
                v.append(sg * a)
        return coo_matrix((v, (r, c)), shape=(len(rows), n)).tocsr()

    kwargs = {}
    if ub_rows:
        kwargs.update(A_ub=block(ub_rows, ub_sign), b_ub=np.array(ub_rhs))
    if eq_rows:
        kwargs.update(A_eq=block(eq_rows), b_eq=np.array(eq_rhs))
    bounds = [(None if math.isinf(lo) else lo, None if math.isinf(up) else up)
              for lo, up in zip(lp.lower, lp.upper)]
    res = linprog(np.asarray(lp.cost), bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-9,
                           "dual_feasibility_tolerance": 1e-9}, **kwargs)
    status = {0: "optimal", 1: "iteration-limit", 2: "infeasible", 3: "unbounded"}.get(
        res.status, "infeasible")
    sol = LpSolution(status=status, iterations=int(getattr(res, "nit", 0)),
                     col_index=lp.col_index, row_index=lp.row_index)
    if status != "optimal":
        return sol
    sol.x = np.asarray(res.x, dtype=float)
    sol.objective = float(res.fun)
    duals = np.zeros(lp.num_rows)
    if ub_rows:
        duals[ub_rows] = np.asarray(res.ineqlin.marginals) * np.asarray(ub_sign)
    if eq_rows:
        duals[eq_rows] = np.asarray(res.eqlin.marginals)
    sol.duals = duals
    sol.reduced_costs = np.asarray(lp.cost) - lp.dense_matrix().T @ duals
    return sol


def add_cut(lp: LinearProgram, cut) -> bool:
    """Append ``cut`` (``coefs``, ``rhs``, ``name``) as a <=-row.

    Returns False, leaving ``lp`` unchanged, when an identical row exists.
    """
    for col in cut.coefs:
        if not lp.has_column(col):
            raise LpError(f"cut {cut.name!r} references unknown column {col!r}")
    if lp.has_row_like(cut.coefs, LE, cut.rhs):
        return False
    name = cut.name
    k = 1
    while lp.has_row(name):
        k += 1
        name = f"{cut.name}#{k}"
    lp.add_row(name, cut.coefs, LE, cut.rhs)
    return True


def dual_objective(lp: LinearProgram, sol: LpSolution) -> float:
    """Objective of the dual solution carried by ``sol`` (strong-duality check)."""
    rlo, rup = lp.row_bounds()
    act = lp.row_activity(sol.x)
    total = 0.0
    for i, y in enumerate(sol.duals):
        if abs(y) <= 1e-12:
            continue
        bound = rup[i] if y < 0 else rlo[i]
        if not math.isfinite(bound):
            bound = act[i]
        total += y * bound
    for j, d in enumerate(sol.reduced_costs):
        if abs(d) <= 1e-12:
            continue
        bound = lp.lower[j] if d > 0 else lp.upper[j]
        if not math.isfinite(bound):
            bound = sol.x[j]
        total += d * bound
    return total


__all__ = ["solve", "add_cut", "dual_objective", "BACKENDS", "GE", "LE", "EQ"]

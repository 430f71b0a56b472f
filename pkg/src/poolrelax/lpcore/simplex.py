"""Bounded-variable revised simplex on a sparse LU with an eta file.

The LP ``min c'x, rlo <= Ax <= rup, lo <= x <= up`` is solved in the form
``[A  -I] (x, s) = 0`` where the logical ``s = Ax`` carries the row bounds.
A cold start uses the all-logical basis.  A warm start takes a previous
basis: if it is primal feasible we continue with primal phase 2, if it is
dual feasible (the usual case after appending cuts or tightening bounds)
we run the dual simplex, otherwise a composite primal phase 1.

Pricing is Dantzig's rule; after ``bland_after`` consecutive degenerate
pivots the entering/leaving choice switches to Bland's smallest-index rule
so the method terminates.
"""

from __future__ import annotations

import logging
import math

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.csgraph import structural_rank
from scipy.sparse.linalg import splu

from .lp import Basis, LinearProgram, LpSolution

log = logging.getLogger(__name__)

AT_LB, AT_UB, FREE, BASIC = 0, 1, 2, 3

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
# basic infeasibilities up to this size that no pivot can repair are absorbed
# by shifting the bound (the reported point is re-checked against 1e-7)
ACCEPT_TOL = 1e-7
REFACTOR_EVERY = 64
# fresh factorizations tried before an infeasible or unbounded verdict
MAX_RECOVERIES = 3


class _Engine:
    def __init__(self, A, c, lo, up, max_iter, bland_after):
        m, n = A.shape
        self.m, self.n = m, n
        self.recoveries = 0
        self.A = sp.csc_matrix(A)
        self.AT = self.A.T.tocsr()
        self.c = np.concatenate([c, np.zeros(m)])
        self.lo = lo
        self.up = up
        self.max_iter = max_iter
        self.bland_after = bland_after
        self.iterations = 0
        self.degenerate_run = 0
        self.status = np.full(n + m, AT_LB, dtype=np.int8)
        self.x = np.zeros(n + m)
        self.basic = np.arange(n, n + m)
        self.pos = np.full(n + m, -1)
        self.lu = None
        self.etas: list[tuple[int, np.ndarray]] = []

    # -- linear algebra helpers ------------------------------------------
    def column(self, j):
        e = np.zeros(self.m)
        if j < self.n:
            a, b = self.A.indptr[j], self.A.indptr[j + 1]
            e[self.A.indices[a:b]] = self.A.data[a:b]
        else:
            e[j - self.n] = -1.0
        return e

    def basis_matrix(self):
        structural = self.basic[self.basic < self.n]
        k_struct = np.nonzero(self.basic < self.n)[0]
        sub = self.A[:, structural].tocoo()
        logical = np.nonzero(self.basic >= self.n)[0]
        rows = np.concatenate([sub.row, self.basic[logical] - self.n])
        cols = np.concatenate([k_struct[sub.col], logical])
        vals = np.concatenate([sub.data, -np.ones(logical.size)])
        return sp.csc_matrix((vals, (rows, cols)), shape=(self.m, self.m))

    def refactor(self):
        if self.m == 0:
            self.lu, self.etas = None, []
            return True
        B = self.basis_matrix()
        # SuperLU can crash on structurally singular input, so screen first
        if structural_rank(B) < self.m:
            return False
        try:
            lu = splu(B, permc_spec="COLAMD")
        except RuntimeError:
            return False
        diag = np.abs(lu.U.diagonal())
        if diag.size and (diag.min() <= 1e-11 * max(1.0, diag.max())):
            return False
        self.lu, self.etas = lu, []
        return True

    def repair(self):
        """Swap dependent basic columns for logicals of uncovered rows.

        Column-pivoted QR of the basis finds a maximal independent subset;
        a second pivoted QR of the orthogonal complement picks the rows whose
        logicals complete it.  Dropped variables go to their nearest bound.
        """
        B = self.basis_matrix().toarray()
        _, R, piv = sla.qr(B, pivoting=True)
        d = np.abs(np.diag(R))
        rank = int(np.sum(d > 1e-9 * max(1.0, d[0] if d.size else 1.0)))
        if rank == self.m:
            return self.refactor()
        Q, _ = sla.qr(B[:, piv[:rank]])
        _, _, rows = sla.qr(Q[:, rank:].T, pivoting=True)
        fresh = [self.n + int(i) for i in rows if self.pos[self.n + int(i)] < 0]
        for k, j in zip(piv[rank:], fresh):
            old = self.basic[k]
            self.pos[old] = -1
            lo, up = self.lo[old], self.up[old]
            if math.isfinite(lo) and math.isfinite(up):
                self.status[old] = AT_LB if self.x[old] - lo <= up - self.x[old] else AT_UB
            else:
                self.status[old] = self.default_status(old)
            self.basic[k] = j
            self.pos[j] = k
            self.status[j] = BASIC
        log.debug("basis repair replaced %d columns", self.m - rank)
        if not self.refactor():
            return False
        self.compute_primal()
        return True

    def ftran(self, a):
        """B^-1 a."""
        if self.m == 0:
            return np.zeros(0)
        v = self.lu.solve(a)
        for r, alpha in self.etas:
            vr = v[r] / alpha[r]
            if vr != 0.0:
                v -= alpha * vr
            v[r] = vr
        return v

    def btran(self, c):
        """c' B^-1 as a vector."""
        if self.m == 0:
            return np.zeros(0)
        w = np.array(c, dtype=float)
        for r, alpha in reversed(self.etas):
            wr = w[r]
            w[r] = 0.0
            w[r] = (wr - np.dot(w, alpha)) / alpha[r]
        return self.lu.solve(w, trans="T")

    def nonbasic_value(self, j):
        s = self.status[j]
        if s == AT_LB:
            return self.lo[j]
        if s == AT_UB:
            return self.up[j]
        return 0.0

    def default_status(self, j):
        if math.isfinite(self.lo[j]):
            return AT_LB
        if math.isfinite(self.up[j]):
            return AT_UB
        return FREE

    def install(self, basic, upper_set):
        """Set basis head and nonbasic statuses; returns False if singular."""
        self.basic = np.asarray(basic, dtype=int)
        self.pos[:] = -1
        self.pos[self.basic] = np.arange(self.m)
        for j in range(self.n + self.m):
            if self.pos[j] >= 0:
                self.status[j] = BASIC
            elif j in upper_set and math.isfinite(self.up[j]):
                self.status[j] = AT_UB
            else:
                self.status[j] = self.default_status(j)
        return self.refactor()

    def compute_primal(self):
        nb = self.status != BASIC
        xn = np.zeros(self.n + self.m)
        idx = np.nonzero(nb)[0]
        for j in idx:
            xn[j] = self.nonbasic_value(j)
        self.x = xn
        # B x_B = -(A x_struct_nonbasic - s_nonbasic)
        rhs = -(self.A @ xn[: self.n] - xn[self.n:])
        xb = self.ftran(rhs)
        # one step of iterative refinement against the true basis matrix
        if self.m:
            xb += self.ftran(rhs - self.basis_matrix() @ xb)
        self.x[self.basic] = xb

    def duals(self, cost):
        return self.btran(cost[self.basic])

    def reduced_costs(self, cost, y):
        d = np.empty(self.n + self.m)
        d[: self.n] = cost[: self.n] - self.AT @ y
        d[self.n:] = cost[self.n:] + y
        d[self.basic] = 0.0
        return d

    def pivot(self, r, j, alpha, leave_status):
        """Entering j replaces basic position r; alpha = Binv @ column(j)."""
        leaving = self.basic[r]
        self.status[leaving] = leave_status
        self.x[leaving] = self.up[leaving] if leave_status == AT_UB else self.lo[leaving]
        self.etas.append((r, np.array(alpha)))
        self.basic[r] = j
        self.pos[leaving] = -1
        self.pos[j] = r
        self.status[j] = BASIC
        if len(self.etas) >= REFACTOR_EVERY:
            if self.refactor() or self.repair():
                self.compute_primal()
        return leaving

    def recover(self):
        """Refactor (repairing a singular basis) and recompute x before a
        final verdict; drift in the eta file can fake a stall."""
        if self.recoveries >= MAX_RECOVERIES or self.m == 0:
            return False
        self.recoveries += 1
        if not (self.refactor() or self.repair()):
            return False
        self.compute_primal()
        return True

    def infeasibility(self):
        xb = self.x[self.basic]
        lo = self.lo[self.basic]
        up = self.up[self.basic]
        return np.maximum(lo - xb, 0.0) + np.maximum(xb - up, 0.0)

    def shift_bounds(self):
        """Absorb tiny residual infeasibilities; False if any is too large."""
        inf = self.infeasibility()
        if inf.max(initial=0.0) > ACCEPT_TOL:
            return False
        for r in np.nonzero(inf > 0)[0]:
            b = self.basic[r]
            self.lo[b] = min(self.lo[b], self.x[b])
            self.up[b] = max(self.up[b], self.x[b])
        return True

    def tick(self, step):
        self.iterations += 1
        if step <= 1e-12:
            self.degenerate_run += 1
        else:
            self.degenerate_run = 0

    @property
    def bland(self):
        return self.degenerate_run >= self.bland_after

    # -- primal simplex ----------------------------------------------------
    def primal(self, phase1_only=False):
        """Composite primal simplex. Returns 'optimal', 'infeasible',
        'unbounded' or 'iteration-limit'."""
        while True:
            if self.iterations >= self.max_iter:
                return "iteration-limit"
            xb = self.x[self.basic]
            lo_b = self.lo[self.basic]
            up_b = self.up[self.basic]
            below = xb < lo_b - FEAS_TOL
            above = xb > up_b + FEAS_TOL
            phase1 = bool(below.any() or above.any())
            if phase1:
                cost = np.zeros(self.n + self.m)
                cost[self.basic[below]] = -1.0
                cost[self.basic[above]] = 1.0
            elif phase1_only:
                return "optimal"
            else:
                cost = self.c
            y = self.duals(cost)
            d = self.reduced_costs(cost, y)
            st = self.status
            movable = self.lo < self.up
            cand = movable & (
                ((st == AT_LB) & (d < -OPT_TOL))
                | ((st == AT_UB) & (d > OPT_TOL))
                | ((st == FREE) & (np.abs(d) > OPT_TOL))
            )
            idx = np.nonzero(cand)[0]
            if idx.size == 0:
                if phase1 and (self.shift_bounds() or self.recover()):
                    continue
                return "infeasible" if phase1 else "optimal"
            if self.bland:
                j = int(idx[0])
            else:
                j = int(idx[np.argmax(np.abs(d[idx]))])
            direction = 1.0 if d[j] < 0 else -1.0
            alpha = self.ftran(self.column(j))
            # entries below the pivot tolerance are treated as round-off so
            # the step agrees with the ratio test
            alpha[np.abs(alpha) <= PIVOT_TOL] = 0.0
            delta = -direction * alpha  # change of x_B per unit step

            theta = math.inf
            leave = -1
            leave_to = AT_LB
            flip = self.up[j] - self.lo[j]
            if flip < theta:
                theta = flip
            ratios = np.full(self.m, np.inf)
            targets = np.zeros(self.m, dtype=np.int8)
            big = np.abs(alpha) > PIVOT_TOL
            dec = big & (delta < 0)
            inc = big & (delta > 0)
            if phase1:
                feas = ~(below | above)
                m_dec = dec & (feas | above)
                # above-upper vars moving down stop at upper, feasible ones at lower
                lim = np.where(above, up_b, lo_b)
                with np.errstate(invalid="ignore", divide="ignore"):
                    ratios[m_dec] = (xb[m_dec] - lim[m_dec]) / -delta[m_dec]
                targets[m_dec] = np.where(above[m_dec], AT_UB, AT_LB)
                m_inc = inc & (feas | below)
                lim = np.where(below, lo_b, up_b)
                with np.errstate(invalid="ignore", divide="ignore"):
                    ratios[m_inc] = (lim[m_inc] - xb[m_inc]) / delta[m_inc]
                targets[m_inc] = np.where(below[m_inc], AT_LB, AT_UB)
            else:
                ratios[dec] = (xb[dec] - lo_b[dec]) / -delta[dec]
                targets[dec] = AT_LB
                ratios[inc] = (up_b[inc] - xb[inc]) / delta[inc]
                targets[inc] = AT_UB
            ratios = np.where(np.isnan(ratios), np.inf, np.maximum(ratios, 0.0))
            rmin = ratios.min() if self.m else math.inf
            if rmin < theta:
                ties = np.nonzero(ratios <= rmin + 1e-12)[0]
                if self.bland:
                    leave = int(ties[np.argmin(self.basic[ties])])
                else:
                    leave = int(ties[np.argmax(np.abs(alpha[ties]))])
                theta = ratios[leave]
                leave_to = targets[leave]
            if not math.isfinite(theta):
                if self.recover():
                    continue
                return "infeasible" if phase1 else "unbounded"
            self.tick(theta)
            self.x[j] += direction * theta
            self.x[self.basic] += delta * theta
            if leave < 0:
                self.status[j] = AT_UB if direction > 0 else AT_LB
                self.x[j] = self.up[j] if direction > 0 else self.lo[j]
                continue
            self.pivot(leave, j, alpha, leave_to)

    # -- dual simplex --------------------------------------------------------
    def dual_feasible(self):
        y = self.duals(self.c)
        d = self.reduced_costs(self.c, y)
        st = self.status
        movable = self.lo < self.up
        bad = movable & (
            ((st == AT_LB) & (d < -OPT_TOL))
            | ((st == AT_UB) & (d > OPT_TOL))
            | ((st == FREE) & (np.abs(d) > OPT_TOL))
        )
        return not bad.any()

    def dual(self):
        """Dual simplex from a dual feasible basis. Returns 'optimal',
        'infeasible', 'iteration-limit' or 'lost' (dual feasibility lost)."""
        while True:
            if self.iterations >= self.max_iter:
                return "iteration-limit"
            infeas = self.infeasibility()
            if self.m == 0 or infeas.max() <= FEAS_TOL:
                return "optimal"
            if self.bland:
                cand = np.nonzero(infeas > FEAS_TOL)[0]
                r = int(cand[np.argmin(self.basic[cand])])
            else:
                r = int(np.argmax(infeas))
            i = self.basic[r]
            xr = self.x[i]
            going_up = xr < self.lo[i]
            target = self.lo[i] if going_up else self.up[i]
            e_r = np.zeros(self.m)
            e_r[r] = 1.0
            rho = self.btran(e_r)
            alpha_r = np.empty(self.n + self.m)
            alpha_r[: self.n] = self.AT @ rho
            alpha_r[self.n:] = -rho
            y = self.duals(self.c)
            d = self.reduced_costs(self.c, y)
            st = self.status
            movable = (self.lo < self.up) & (st != BASIC)
            big = np.abs(alpha_r) > PIVOT_TOL
            # x_r changes by -alpha_rj * dx_j
            if going_up:
                ok = ((st == AT_LB) & (alpha_r < 0)) | ((st == AT_UB) & (alpha_r > 0))
            else:
                ok = ((st == AT_LB) & (alpha_r > 0)) | ((st == AT_UB) & (alpha_r < 0))
            ok = movable & big & (ok | (st == FREE))
            idx = np.nonzero(ok)[0]
            if idx.size == 0:
                if infeas[r] <= ACCEPT_TOL:
                    self.lo[i] = min(self.lo[i], xr)
                    self.up[i] = max(self.up[i], xr)
                    continue
                if self.recover():
                    if not self.dual_feasible():
                        return "lost"
                    continue
                return "infeasible"
            ratios = np.abs(d[idx]) / np.abs(alpha_r[idx])
            rmin = ratios.min()
            ties = idx[ratios <= rmin + 1e-12]
            if self.bland:
                j = int(ties.min())
            else:
                j = int(ties[np.argmax(np.abs(alpha_r[ties]))])
            dxj = (target - xr) / -alpha_r[j]
            alpha = self.ftran(self.column(j))
            alpha[np.abs(alpha) <= PIVOT_TOL] = 0.0
            self.tick(abs(d[j]))
            self.x[self.basic] -= alpha * dxj
            self.x[j] += dxj
            self.pivot(r, j, alpha, AT_LB if going_up else AT_UB)
            if not self.dual_feasible():
                return "lost"


def solve_simplex(lp: LinearProgram, basis: Basis | None = None,
                  max_iter: int = 10**6, bland_after: int = 1000) -> LpSolution:
    n, m = lp.num_cols, lp.num_rows
    A = lp.sparse_matrix()
    c = np.asarray(lp.cost, dtype=float)
    rlo, rup = lp.row_bounds()
    lo = np.concatenate([np.asarray(lp.lower, dtype=float), rlo])
    up = np.concatenate([np.asarray(lp.upper, dtype=float), rup])
    eng = _Engine(A, c, lo, up, max_iter, bland_after)

    started = False
    if basis is not None:
        keys = _var_keys(lp)
        index = {k: t for t, k in enumerate(keys)}
        head = [index[k] for k in basis.basic if k in index]
        have = set(head)
        known = set(basis.basic) | set(basis.at_upper)
        # rows added after the basis was taken enter with their logical basic
        for i in range(m):
            if len(head) >= m:
                break
            if n + i not in have and ("r", lp.row_names[i]) not in known:
                head.append(n + i)
                have.add(n + i)
        if len(head) == m and len(have) == m:
            upper = {index[k] for k in basis.at_upper if k in index}
            started = eng.install(head, upper)
    if not started:
        eng.install(list(range(n, n + m)), set())
    eng.compute_primal()

    status = None
    infeas = eng.infeasibility().max() if m else 0.0
    if basis is not None and infeas > FEAS_TOL and eng.dual_feasible():
        status = eng.dual()
        if status == "lost":
            status = None
        elif status == "optimal":
            status = eng.primal()
    if status is None:
        status = eng.primal()
    if status == "optimal":
        # clean-up pass on a fresh factorization
        if eng.refactor():
            eng.compute_primal()
            if eng.infeasibility().max(initial=0.0) > FEAS_TOL:
                status = eng.primal()
    return _finish(lp, eng, status)


def _var_keys(lp: LinearProgram):
    return [("c", nm) for nm in lp.col_names] + [("r", nm) for nm in lp.row_names]


def _finish(lp, eng, status):
    n = eng.n
    sol = LpSolution(status=status, iterations=eng.iterations,
                     col_index=lp.col_index, row_index=lp.row_index)
    if status != "optimal":
        return sol
    y = eng.duals(eng.c)
    d = eng.reduced_costs(eng.c, y)
    x = eng.x[:n].copy()
    sol.x = x
    sol.objective = float(np.dot(eng.c[:n], x))
    sol.duals = y
    sol.reduced_costs = d[:n]
    keys = _var_keys(lp)
    sol.basis = Basis(
        basic=[keys[j] for j in eng.basic],
        at_upper={keys[j] for j in np.nonzero(eng.status == AT_UB)[0]},
    )
    return sol

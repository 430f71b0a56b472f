"""Valid inequalities for the aggregated five-variable set and their separation.

All algebra here works in the scaled space (capacity one) on points
``(x, u, y, z, t)``.  The four families:

``I13-conic``   (u - bl x)(u - gl x) <= -bl x (t - gl)            needs bl < 0
``I16-yikes``   bh (gh x - u) + h(y, u - gl x) <= bh (gh - t)     needs bh > 0, gl < 0
``I20-linear``  (gh-gl) y + gl (gh x - u) + bh (u - gl x) <= bh (t - gl)     bh > 0
``I22-linear``  (gl - bl)(gh x - u) <= -bl (gh - t)                          bl < 0

with ``gl, gh, bl, bh`` the lower/upper excess bounds of the pool and the
by-pass.  The two nonlinear ones are convex and are enforced by tangent
(gradient) cuts; the linear ones are added once.
"""

from __future__ import annotations

import logging
import math
import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .aggregation import TParams, TripleContext
from .lpcore import Basis, LinearProgram, LpSolution, add_cut, solve

log = logging.getLogger(__name__)

CONIC, YIKES, LIN20, LIN22 = "I13-conic", "I16-yikes", "I20-linear", "I22-linear"
FAMILIES = (CONIC, YIKES, LIN20, LIN22)

X_GUARD = 1e-6
YV_GUARD = 1e-9


@dataclass
class Cut:
    coefs: dict[str, float]
    rhs: float
    name: str
    triple: tuple[str, str, str] | None = None
    family: str = ""
    point: tuple[float, ...] | None = None
    violation: float = 0.0
    round: int = 0

    def activity(self, values) -> float:
        return math.fsum(v * float(values[c]) for c, v in self.coefs.items())

    def slack(self, values) -> float:
        return self.rhs - self.activity(values)


# -- scalar/vector algebra in scaled space -----------------------------------

def g_func(y, v):
    """g(y, v) = y v / (y + v), concave on y > 0, v >= 0."""
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    den = y + v
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, y * v / np.where(den > 0, den, 1.0), 0.0)
    return out


def g_grad(y, v):
    den = (y + v) ** 2
    return v * v / den, y * y / den


def h_func(p: TParams, y, v):
    """Extension by zero: 0 for y <= 0, (gh - gl) y + gl g(y, v) otherwise.

    Convex on R x R+ when gh >= 0.  For gh < 0 its slope in y just right of
    zero is gh < 0 and convexity fails; see :func:`h_envelope`.
    """
    y = np.asarray(y, dtype=float)
    val = (p.gamma_hi - p.gamma_lo) * y + p.gamma_lo * g_func(y, v)
    return np.where(y > 0, val, 0.0)


def h_kink(p: TParams) -> tuple[float, float]:
    """Ratio r* = y/v where h(., 1) attains its minimum c, and c.

    h(y, v) = v phi(y / v) with phi(r) = (gh - gl) r + gl r / (r + 1); for
    gh < 0 phi dips below zero on (0, inf) with minimum at
    r* = sqrt(-gl / (gh - gl)) - 1.  Otherwise r* = 0 and c = 0.
    """
    gl, gh = p.gamma_lo, p.gamma_hi
    if gh >= 0 or gl >= 0:
        return 0.0, 0.0
    r = math.sqrt(-gl / (gh - gl)) - 1.0
    return r, (gh - gl) * r + gl * r / (r + 1.0)


def h_envelope(p: TParams, y, v):
    """Convex envelope of :func:`h_func` over R x R+.

    Equal to h where y >= r* v and to c v elsewhere (c <= 0), so it never
    exceeds h; the two coincide when gh >= 0.
    """
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    r, c = h_kink(p)
    if r == 0.0:
        return h_func(p, y, v)
    return np.where(y >= r * v, h_func(p, y, v), c * v)


def conic_violation(p: TParams, x, u, t, eps: float = X_GUARD):
    """(u - gl x)^2 / max(x, eps) - [(-bl)(t - gl) + (bl - gl)(u - gl x)].

    Positive values mean the conic inequality is violated.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(u, dtype=float) - p.gamma_lo * x
    lin = -p.beta_lo * (np.asarray(t, dtype=float) - p.gamma_lo) + (p.beta_lo - p.gamma_lo) * v
    return v * v / np.maximum(x, eps) - lin


def conic_product_form(p: TParams, x, u, t):
    """LHS - RHS of the original product form of the conic inequality."""
    return (u - p.beta_lo * x) * (u - p.gamma_lo * x) + p.beta_lo * x * (t - p.gamma_lo)


def soc_second_factor(p: TParams, x, u, t):
    """(-bl)(t - gl) + (bl - gl)(u - gl x); nonnegative on the set."""
    return -p.beta_lo * (t - p.gamma_lo) + (p.beta_lo - p.gamma_lo) * (u - p.gamma_lo * x)


def yikes_violation(p: TParams, x, u, y, t, envelope: bool = True):
    """LHS - RHS of the extended yikes inequality (with the convex envelope
    of h unless ``envelope`` is False)."""
    v = np.asarray(u, dtype=float) - p.gamma_lo * np.asarray(x, dtype=float)
    v = np.maximum(v, 0.0)
    h = h_envelope(p, y, v) if envelope else h_func(p, y, v)
    return (p.beta_hi * (p.gamma_hi * x - u) + h
            - p.beta_hi * (p.gamma_hi - t))


def yikes_fraction_form(p: TParams, x, u, y, t):
    """LHS - RHS of the y > 0 form with the explicit fraction."""
    v = u - p.gamma_lo * x
    return ((p.gamma_hi - p.gamma_lo) * y + p.beta_hi * (p.gamma_hi * x - u)
            + p.gamma_lo * y * v / (y + v) - p.beta_hi * (p.gamma_hi - t))


def linear20(p: TParams) -> tuple[np.ndarray, float]:
    gl, gh, bh = p.gamma_lo, p.gamma_hi, p.beta_hi
    return np.array([gl * gh - bh * gl, bh - gl, gh - gl, 0.0, -bh]), -bh * gl


def linear22(p: TParams) -> tuple[np.ndarray, float]:
    gl, gh, bl = p.gamma_lo, p.gamma_hi, p.beta_lo
    return np.array([(gl - bl) * gh, -(gl - bl), 0.0, 0.0, -bl]), -bl * gh


def conic_cut(p: TParams, point) -> tuple[np.ndarray, float] | None:
    """Tangent cut of the conic inequality at ``point``; None if x < guard."""
    x, u, _, _, t = point
    if x < X_GUARD:
        return None
    gl, bl = p.gamma_lo, p.beta_lo
    v = u - gl * x
    # v^2/x is 1-homogeneous, so its tangent plane passes through the origin
    dq_du = 2.0 * v / x
    dq_dx = -2.0 * gl * v / x - v * v / (x * x)
    a = np.array([dq_dx + (bl - gl) * gl, dq_du - (bl - gl), 0.0, 0.0, bl])
    return a, bl * gl


def yikes_cut(p: TParams, point) -> tuple[np.ndarray, float] | None:
    """Tangent cut of the extended yikes inequality; None unless y > 0.

    Below the kink ratio the envelope is linear, c v, and the cut is the
    fixed inequality bh (gh x - u) + c (u - gl x) <= bh (gh - t).
    """
    x, u, y, _, t = point
    v = max(u - p.gamma_lo * x, 0.0)
    if y <= 0 or y + v < YV_GUARD:
        return None
    gl, gh, bh = p.gamma_lo, p.gamma_hi, p.beta_hi
    r, c = h_kink(p)
    if y < r * v:
        return np.array([bh * gh - c * gl, -bh + c, 0.0, 0.0, bh]), bh * gh
    gy, gv = g_grad(y, v)
    a = np.array([bh * gh - gl * gl * gv, -bh + gl * gv, (gh - gl) + gl * gy, 0.0, bh])
    return a, bh * gh


def conic_applies(p: TParams) -> bool:
    return p.beta_lo < 0


def yikes_applies(p: TParams) -> bool:
    return p.beta_hi > 0 and p.gamma_lo < 0


def violation(family: str, p: TParams, point) -> float:
    x, u, y, z, t = point
    if family == CONIC:
        return float(conic_violation(p, x, u, t))
    if family == YIKES:
        return float(yikes_violation(p, x, u, y, t))
    a, b = linear20(p) if family == LIN20 else linear22(p)
    return float(np.dot(a, point) - b)


# -- model level --------------------------------------------------------------

def eval_conic(ctx: TripleContext, point) -> float:
    """Conic violation at a scaled ``(x, u, t)`` point of ``ctx``."""
    x, u, t = point
    return float(conic_violation(ctx.params, x, u, t))


def eval_yikes(ctx: TripleContext, point) -> float:
    x, u, y, t = point
    return float(yikes_violation(ctx.params, x, u, y, t))


def gradient_cut(family: str, ctx: TripleContext, point, rnd: int = 0) -> Cut | None:
    """Tangent cut at a scaled point ``(x, u, y, z, t)``, in model columns.

    Returns None when the gradient is undefined there (guards).
    """
    p = ctx.params
    res = conic_cut(p, point) if family == CONIC else yikes_cut(p, point)
    if res is None:
        return None
    a, b = res
    coefs, rhs = ctx.unscale_inequality(a, b)
    return Cut(coefs, rhs, f"cut:{family[:3]}:{ctx.label}:r{rnd}", ctx.key, family,
               tuple(float(v) for v in point), violation(family, p, point), rnd)


def linear_cuts(ctx: TripleContext) -> list[Cut]:
    p = ctx.params
    out = []
    if ctx.has_bypass and p.beta_hi > 0:
        coefs, rhs = ctx.unscale_inequality(*linear20(p))
        out.append(Cut(coefs, rhs, f"lin20:{ctx.label}", ctx.key, LIN20))
    if ctx.has_bypass and p.beta_lo < 0:
        coefs, rhs = ctx.unscale_inequality(*linear22(p))
        out.append(Cut(coefs, rhs, f"lin22:{ctx.label}", ctx.key, LIN22))
    return out


def add_linear_inequalities(ctx: TripleContext, lp: LinearProgram) -> int:
    return sum(add_cut(lp, c) for c in linear_cuts(ctx))


@dataclass
class SeparationReport:
    rounds: int = 0
    cuts_per_family: Counter = field(default_factory=Counter)
    objective: float = math.nan
    trace: list[float] = field(default_factory=list)
    cuts: list[Cut] = field(default_factory=list)
    status: str = "converged"
    seconds: float = 0.0
    solution: LpSolution | None = None


def separate_root(lp: LinearProgram, contexts: list[TripleContext],
                  tol_conic: float = 1e-4, tol_yikes: float = 1e-5,
                  max_rounds: int = 200, backend: str = "simplex",
                  basis: Basis | None = None) -> SeparationReport:
    """Cutting-plane loop: solve, add tangent cuts for violated conic and
    yikes inequalities (at most one per context and family per round),
    repeat until nothing is violated beyond tolerance."""
    t0 = time.perf_counter()
    rep = SeparationReport()
    conic_ctx = [c for c in contexts if c.has_bypass and conic_applies(c.params)]
    yikes_ctx = [c for c in contexts if c.has_bypass and yikes_applies(c.params)]
    while True:
        sol = solve(lp, backend=backend, basis=basis)
        if not sol.optimal:
            rep.status = sol.status
            break
        basis = sol.basis
        rep.solution = sol
        rep.objective = sol.objective
        rep.trace.append(sol.objective)
        if rep.rounds >= max_rounds:
            rep.status = "round-limit"
            break
        added = 0
        for fam, group, tol in ((CONIC, conic_ctx, tol_conic), (YIKES, yikes_ctx, tol_yikes)):
            for ctx in group:
                pt = ctx.scaled_point(sol)
                if violation(fam, ctx.params, pt) <= tol:
                    continue
                cut = gradient_cut(fam, ctx, pt, rep.rounds)
                if cut is None or cut.violation <= tol:
                    continue
                if add_cut(lp, cut):
                    rep.cuts.append(cut)
                    rep.cuts_per_family[fam] += 1
                    added += 1
        if not added:
            break
        rep.rounds += 1
        log.debug("round %d: objective %.8g, %d cuts", rep.rounds, sol.objective, added)
    rep.seconds = time.perf_counter() - t0
    return rep


def cut_pool_csv(cuts: list[Cut]) -> str:
    """One line per cut: triple,family,round,violation,then column=coef pairs."""
    lines = ["triple,family,round,violation,coefficients"]
    for c in cuts:
        triple = ":".join(c.triple) if c.triple else ""
        coefs = ";".join(f"{k}={v:.17g}" for k, v in c.coefs.items())
        lines.append(f"{triple},{c.family},{c.round},{c.violation:.6g},{coefs};rhs={c.rhs:.17g}")
    return "\n".join(lines) + "\n"

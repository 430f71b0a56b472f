"""Numerical certification of the convex-hull results on the five-variable set.

``T`` (capacity scaled to one) is

    u = x t,  y + u <= 0,  z + x <= 1,  bl z <= y <= bh z,
    z >= 0,  x in [0, 1],  t in [gl, gh].

For a linear objective ``c`` the maximum over ``T`` equals the maximum over
conv(T).  :func:`brute_force_max` computes it by gridding the two
"nonconvex" coordinates ``(x, t)`` and solving the remaining polygon in
``(y, z)`` exactly; :func:`cutting_plane_max` maximizes over one of the
relaxations ``R0``-``R3`` with gradient cuts.  In each sign case the
matching relaxation should describe conv(T), so the two values agree.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .aggregation import CASE1, CASE2, CASE3, TParams
from .cuts import (CONIC, LIN20, LIN22, YIKES, conic_applies, conic_cut, linear20,
                   linear22, violation, yikes_applies, yikes_cut)
from .lpcore import EQ, GE, LE, LinearProgram, solve

SetTParams = TParams

COLS = ("x", "u", "y", "z", "t")
RELAXATIONS = {
    "R0": (),
    "R1": (CONIC, YIKES),
    "R2": (YIKES, LIN20),
    "R3": (CONIC, LIN22),
}
CASE_RELAXATION = {CASE1: "R1", CASE2: "R2", CASE3: "R3"}


class SeparationError(RuntimeError):
    pass


# -- brute force over T ------------------------------------------------------

def _polygon_vertices(x, u, p: TParams):
    """Candidate vertices (y, z) of the (y, z) polygon for arrays x, u.

    Returns arrays of shape (9, ...) and a feasibility mask.
    """
    bl, bh = p.beta_lo, p.beta_hi
    zx = 1.0 - x
    zero = np.zeros_like(x)
    ys, zs = [], []

    def add(y, z):
        ys.append(y)
        zs.append(z)

    add(zero, zero)
    add(-u, zero)                         # z = 0, y = -u
    add(bl * zx, zx)                      # z = 1-x on y = bl z
    add(bh * zx, zx)                      # z = 1-x on y = bh z
    add(-u, zx)                           # z = 1-x on y = -u
    with np.errstate(divide="ignore", invalid="ignore"):
        add(-u, -u / bl if bl != 0 else np.full_like(x, np.nan))
        add(-u, -u / bh if bh != 0 else np.full_like(x, np.nan))
    add(zero, zx)                         # degenerate cones (bl = bh = 0)
    add(np.minimum(bh * zx, -u), zx)
    Y = np.stack(ys)
    Z = np.stack(zs)
    tol = 1e-12
    with np.errstate(invalid="ignore"):
        ok = (np.isfinite(Y) & np.isfinite(Z) & (Z >= -tol) & (Z <= 1.0 - x + tol)
              & (Y >= bl * Z - tol) & (Y <= bh * Z + tol) & (Y <= -u + tol))
    return Y, Z, ok


def _grid_values(p: TParams, C: np.ndarray, xs: np.ndarray, ts: np.ndarray):
    """Objective maxima over (y, z) on the grid xs x ts for objectives C (k, 5).

    Returns array (k, len(xs), len(ts)) with -inf where the polygon is empty.
    """
    X, Tg = np.meshgrid(xs, ts, indexing="ij")
    U = X * Tg
    Y, Z, ok = _polygon_vertices(X, U, p)
    Y = np.where(ok, Y, 0.0)
    Z = np.where(ok, Z, 0.0)
    penalty = np.where(ok, 0.0, -np.inf)
    out = np.empty((C.shape[0],) + X.shape)
    buf = np.empty_like(Y)
    tmp = np.empty_like(Y)
    for k, c in enumerate(C):
        np.multiply(Y, c[2], out=buf)
        np.multiply(Z, c[3], out=tmp)
        buf += tmp
        buf += penalty
        res = out[k]
        buf.max(axis=0, out=res)
        res += c[0] * X
        res += c[1] * U
        res += c[4] * Tg
    return out


def _best_point(p: TParams, c, x, t):
    u = x * t
    Y, Z, ok = _polygon_vertices(np.array([x]), np.array([u]), p)
    vals = np.where(ok[:, 0], c[2] * Y[:, 0] + c[3] * Z[:, 0], -np.inf)
    k = int(np.argmax(vals))
    return (float(x), float(u), float(Y[k, 0]), float(Z[k, 0]), float(t))


def _point_values(p: TParams, c, x, t):
    """Objective maxima over (y, z) at the points (x, t); -inf where empty."""
    u = x * t
    Y, Z, ok = _polygon_vertices(x, u, p)
    yz = np.where(ok, c[2] * Y + c[3] * Z, -np.inf).max(axis=0)
    return c[0] * x + c[1] * u + c[4] * t + yz


def _curve_max(p: TParams, c, n: int, levels: int, refine: int):
    """Maximum along the curves ``x t = -b (1 - x)`` for ``b`` in ``(bl, bh)``.

    On these curves the ``(y, z)`` polygon changes shape (for ``bl`` it
    shrinks to a point), so the objective has a kink there that a plain grid
    approaches slowly.  Between the curves it is bilinear in ``(x, t)`` and
    the maximum lies on the box edges, which the grid covers.
    """
    best, at = -math.inf, None
    for b, lo, hi in ((p.beta_lo, max(p.gamma_lo, 0.0), p.gamma_hi),
                      (p.beta_hi, p.gamma_lo, min(p.gamma_hi, 0.0))):
        if b == 0 or hi <= lo:
            continue
        ts = np.linspace(lo, hi, n)
        h = (hi - lo) / (n - 1)
        bt = None
        for _ in range(levels + 1):
            v = _point_values(p, c, b / (b - ts), ts)
            k = int(np.argmax(v))
            if v[k] > best:
                best, bt = float(v[k]), float(ts[k])
                at = (b / (b - bt), bt)
            if bt is None:
                break
            ts = np.clip(np.linspace(bt - h, bt + h, refine), lo, hi)
            h *= 2.0 / (refine - 1)
    return best, at


def brute_force_max(params: TParams, objective, grid: int = 401, levels: int = 3,
                    refine: int = 41):
    """Maximize ``objective . (x,u,y,z,t)`` over ``T``.

    Grid search over ``(x, t)`` with the ``(y, z)`` polygon solved at its
    vertices, then ``levels`` rounds of local refinement on a shrinking grid.
    The curves where the polygon changes shape are searched separately.
    Returns ``(value, point)``; ``(-inf, None)`` if ``T`` is empty.
    """
    vals, pts = brute_force_batch(params, np.atleast_2d(objective), grid, levels, refine)
    return float(vals[0]), pts[0]


def brute_force_batch(params: TParams, objectives, grid: int = 401, levels: int = 3,
                      refine: int = 41):
    """Vectorized :func:`brute_force_max` for several objectives."""
    p = params
    C = np.asarray(objectives, dtype=float)
    gl, gh = p.gamma_lo, p.gamma_hi
    xs = np.linspace(0.0, 1.0, grid)
    ts = np.linspace(gl, gh, grid) if gh > gl else np.array([gl])
    V = _grid_values(p, C, xs, ts)
    values, points = [], []
    for k, c in enumerate(C):
        flat = int(np.argmax(V[k]))
        i, j = np.unravel_index(flat, V[k].shape)
        best = V[k][i, j]
        if not np.isfinite(best):
            values.append(-math.inf)
            points.append(None)
            continue
        bx, bt = xs[i], ts[j]
        hx = 1.0 / (grid - 1)
        ht = (gh - gl) / (grid - 1) if gh > gl else 0.0
        for _ in range(levels):
            rx = np.clip(np.linspace(bx - hx, bx + hx, refine), 0.0, 1.0)
            rt = np.clip(np.linspace(bt - ht, bt + ht, refine), gl, gh)
            W = _grid_values(p, c[None, :], rx, rt)[0]
            a, b = np.unravel_index(int(np.argmax(W)), W.shape)
            if W[a, b] > best:
                best, bx, bt = W[a, b], rx[a], rt[b]
            hx *= 2.0 / (refine - 1)
            ht *= 2.0 / (refine - 1)
        edge, at = _curve_max(p, c, grid, levels, refine)
        if edge > best:
            best, (bx, bt) = edge, at
        values.append(float(best))
        points.append(_best_point(p, c, bx, bt))
    return np.array(values), points


def monte_carlo_max(params: TParams, objective, samples: int = 10**6, seed: int = 0):
    """Lower bound on the maximum from sampled ``(x, t)``.

    A quarter of the budget lies on the edges of the box and the four corners
    are always included, since maximizers often sit there.
    """
    rng = np.random.default_rng(seed)
    p = params
    x = rng.uniform(0.0, 1.0, samples)
    t = rng.uniform(p.gamma_lo, p.gamma_hi, samples)
    edge = samples // 4
    side = rng.integers(0, 4, edge)
    x[:edge] = np.where(side == 0, 0.0, np.where(side == 1, 1.0, x[:edge]))
    t[:edge] = np.where(side == 2, p.gamma_lo, np.where(side == 3, p.gamma_hi, t[:edge]))
    x[edge:edge + 4] = [0.0, 0.0, 1.0, 1.0]
    t[edge:edge + 4] = [p.gamma_lo, p.gamma_hi, p.gamma_lo, p.gamma_hi]
    u = x * t
    c = np.asarray(objective, dtype=float)
    Y, Z, ok = _polygon_vertices(x, u, p)
    yz = np.where(ok, c[2] * Y + c[3] * Z, -np.inf).max(axis=0)
    return float(np.max(c[0] * x + c[1] * u + c[4] * t + yz))


def sample_T(params: TParams, n: int, rng) -> np.ndarray:
    """Uniform-ish points of ``T``: x, t uniform, u = x t, z in [0, 1-x],
    y uniform in [bl z, min(bh z, -u)]; rows with an empty y-range dropped."""
    p = params
    x = rng.uniform(0.0, 1.0, n)
    t = rng.uniform(p.gamma_lo, p.gamma_hi, n)
    u = x * t
    z = rng.uniform(0.0, 1.0, n) * (1.0 - x)
    ylo = p.beta_lo * z
    yhi = np.minimum(p.beta_hi * z, -u)
    keep = yhi >= ylo
    y = ylo + rng.uniform(0.0, 1.0, n) * np.maximum(yhi - ylo, 0.0)
    return np.column_stack([x, u, y, z, t])[keep]


# -- cutting planes over R0..R3 ----------------------------------------------

def r0_program(params: TParams) -> LinearProgram:
    """The McCormick relaxation R0 of T as an LP in columns x, u, y, z, t."""
    p = params
    gl, gh = p.gamma_lo, p.gamma_hi
    lp = LinearProgram("R0")
    lp.add_column("x", 0.0, 1.0)
    lp.add_column("u", -math.inf, math.inf)
    lp.add_column("y", -math.inf, math.inf)
    lp.add_column("z", 0.0, math.inf)
    lp.add_column("t", gl, gh)
    lp.add_row("yu", {"y": 1, "u": 1}, LE, 0.0)
    lp.add_row("zx", {"z": 1, "x": 1}, LE, 1.0)
    lp.add_row("yz1", {"y": 1, "z": -p.beta_hi}, LE, 0.0)
    lp.add_row("yz2", {"y": 1, "z": -p.beta_lo}, GE, 0.0)
    lp.add_row("us1", {"u": 1, "x": -gl}, GE, 0.0)
    lp.add_row("us2", {"x": gh, "u": -1}, GE, 0.0)
    lp.add_row("ust1", {"u": 1, "x": -gl, "t": -1}, LE, -gl)
    lp.add_row("ust2", {"x": gh, "u": -1, "t": 1}, LE, gh)
    return lp


def _members(relaxation: str, members, params: TParams):
    fams = RELAXATIONS[relaxation] if members is None else tuple(members)
    out = []
    for f in fams:
        if f == CONIC and not conic_applies(params):
            continue
        if f == YIKES and not yikes_applies(params):
            continue
        if f == LIN20 and not params.beta_hi > 0:
            continue
        if f == LIN22 and not params.beta_lo < 0:
            continue
        out.append(f)
    return out


@dataclass
class CuttingPlaneResult:
    value: float
    point: tuple[float, ...]
    rounds: int
    cuts: int


def cutting_plane_max(params: TParams, objective, relaxation: str = "R1",
                      members=None, tol: float = 1e-8, max_rounds: int = 500,
                      detail: bool = False):
    """Maximize over ``relaxation`` (or over R0 plus an explicit ``members``
    list) by Kelley's cutting-plane method on the nonlinear members.

    Members whose sign preconditions fail are skipped, as in the definitions.
    Raises :class:`SeparationError` without convergence in ``max_rounds``.
    """
    p = params
    c = np.asarray(objective, dtype=float)
    lp = r0_program(p)
    for name, col in zip(COLS, c):
        lp.set_cost(name, -float(col))
    fams = _members(relaxation, members, p)
    if LIN20 in fams:
        a, b = linear20(p)
        lp.add_row("lin20", dict(zip(COLS, a)), LE, b)
    if LIN22 in fams:
        a, b = linear22(p)
        lp.add_row("lin22", dict(zip(COLS, a)), LE, b)
    nonlin = [f for f in fams if f in (CONIC, YIKES)]
    basis = None
    ncuts = 0
    for rnd in range(max_rounds + 1):
        sol = solve(lp, basis=basis)
        if not sol.optimal:
            raise SeparationError(f"LP over {relaxation} ended with status {sol.status}")
        basis = sol.basis
        pt = tuple(float(sol[n]) for n in COLS)
        added = 0
        for f in nonlin:
            if violation(f, p, pt) <= tol:
                continue
            res = conic_cut(p, pt) if f == CONIC else yikes_cut(p, pt)
            if res is None:
                continue
            a, b = res
            if lp.has_row_like(dict(zip(COLS, a)), LE, b):
                continue
            lp.add_row(f"cut{ncuts}", dict(zip(COLS, a)), LE, b)
            ncuts += 1
            added += 1
        if not added:
            res = CuttingPlaneResult(-sol.objective, pt, rnd, ncuts)
            return res if detail else res.value
    raise SeparationError(f"no convergence over {relaxation} in {max_rounds} rounds")


# -- McCormick tightness at bounds ---------------------------------------------

@dataclass
class TightnessSample:
    point: tuple[float, ...]
    boundary: bool
    residual: float
    passed: bool


def mccormick_tightness_check(params: TParams, samples: int = 100, seed: int = 0,
                              tol: float = 1e-9) -> list[TightnessSample]:
    """Vertices of R0 for random objectives: where x or t is at a bound,
    ``u = x t`` must hold."""
    p = params
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(samples):
        c = random_objective(rng)
        lp = r0_program(p)
        for name, col in zip(COLS, c):
            lp.set_cost(name, -float(col))
        sol = solve(lp)
        if not sol.optimal:
            continue
        x, u, y, z, t = (float(sol[n]) for n in COLS)
        boundary = (abs(x) <= tol or abs(x - 1) <= tol
                    or abs(t - p.gamma_lo) <= tol or abs(t - p.gamma_hi) <= tol)
        res = abs(u - x * t)
        out.append(TightnessSample((x, u, y, z, t), boundary, res,
                                   (not boundary) or res <= tol))
    return out


# -- certificates ----------------------------------------------------------------

@dataclass
class HullCertificate:
    params: dict
    case: str
    objective: list[float]
    brute_force: float
    cutting_plane: float
    relaxation: str
    gap: float = field(init=False)

    def __post_init__(self):
        self.gap = abs(self.cutting_plane - self.brute_force)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def random_objective(rng) -> np.ndarray:
    v = rng.normal(size=5)
    return v / np.linalg.norm(v)


def random_params(case: str, rng, min_width: float = 0.05) -> TParams:
    """Parameters of the requested sign case; gammas in [-2, 2], beta_lo in
    [-2, 0), beta_hi in (0, 2]."""
    while True:
        if case == CASE1:
            gl, gh = -rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0)
        elif case == CASE2:
            gl, gh = sorted(-rng.uniform(0.0, 2.0, 2))
        elif case == CASE3:
            gl, gh = sorted(rng.uniform(0.0, 2.0, 2))
        else:
            raise ValueError(f"unknown case {case!r}")
        bl = -rng.uniform(0.0, 2.0)
        bh = rng.uniform(0.0, 2.0)
        if gh - gl < min_width or gl == 0 or gh == 0 or bl == 0 or bh == 0:
            continue
        p = TParams(float(gl), float(gh), float(bl), float(bh))
        if p.case == case:
            return p


def case_of(n: int) -> str:
    return {1: CASE1, 2: CASE2, 3: CASE3}[n]


@dataclass
class CertificationReport:
    case: str
    certificates: list[HullCertificate]
    seconds: float
    failures: int = 0

    def pass_rate(self, tol: float = 1e-3) -> float:
        if not self.certificates:
            return 0.0
        ok = sum(c.gap <= tol for c in self.certificates)
        return ok / len(self.certificates)

    def jsonl(self) -> str:
        return "".join(c.to_json() + "\n" for c in self.certificates)


def certify_case(case: str, draws: int = 100, objectives: int = 100, seed: int = 0,
                 relaxation: str | None = None, grid: int = 401,
                 tol: float = 1e-8) -> CertificationReport:
    """Compare the case-matching relaxation with the brute-force oracle."""
    rel = relaxation or CASE_RELAXATION[case]
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    certs = []
    failures = 0
    for _ in range(draws):
        p = random_params(case, rng)
        C = np.array([random_objective(rng) for _ in range(objectives)])
        bf, _ = brute_force_batch(p, C, grid)
        for c, b in zip(C, bf):
            try:
                cp = cutting_plane_max(p, c, rel, tol=tol)
            except SeparationError:
                failures += 1
                cp = math.nan
            certs.append(HullCertificate(asdict(p), case, [float(v) for v in c],
                                         float(b), float(cp), rel))
    return CertificationReport(case, certs, time.perf_counter() - t0, failures)

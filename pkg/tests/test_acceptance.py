"""Acceptance checks, one test per criterion.  Each test records a PASS/FAIL
line that the terminal summary prints, then asserts."""

import numpy as np
import pytest

from conftest import ACCEPTANCE
from poolrelax.aggregation import CASE1, CASE2, CASE3
from poolrelax.cuts import (CONIC, LIN20, LIN22, YIKES, conic_cut, conic_violation, g_func,
                            g_grad, h_envelope, h_func, h_kink, linear20, linear22, yikes_cut,
                            yikes_violation)
from poolrelax.globalsolve import build_relaxation, node_statistics, solve_global
from poolrelax.hulllab import (certify_case, cutting_plane_max, mccormick_tightness_check,
                               random_objective, random_params)
from poolrelax.instance import GeneratorConfig, generate_random, load_fixture
from poolrelax.pqmodel import build_pq
from poolrelax.report import closed_gap, gap, run_suite

FIXTURES = ["haverly1", "haverly2", "haverly3", "bental4"]
PQ_BOUND = {"haverly1": -500.0, "haverly2": -1000.0, "haverly3": -800.0, "bental4": -550.0}
CJJJ_BOUND = {"haverly1": -400.0, "haverly2": -600.0, "haverly3": -791.7, "bental4": -450.0}
OPT = {"haverly1": -400.0, "haverly2": -600.0, "haverly3": -750.0, "bental4": -450.0}
GAP = {"haverly1": 25.0, "haverly2": 66.7, "haverly3": 6.7, "bental4": 22.2}
CLOSED = {"haverly1": 100.0, "haverly2": 100.0, "haverly3": 16.7, "bental4": 100.0}

REL_TOL = 1e-6
CJJJ_ABS = 0.1
PCT_ABS = 0.1
HULL_TOL = 1e-3
HULL_PASS = 0.995
HULL_SECONDS = 600.0
FUZZ_TOL = 1e-9
REDUNDANT_TOL = 1e-9
STRICT_SHARE = 0.9
GAP_REDUCTION = 0.4
SOLVE_SECONDS = 60.0
NODE_SHARE = 0.8
MIDPOINT_SLACK = 1e-12
FD_REL = 1e-6
TIGHT_TOL = 1e-9
CASES = (CASE1, CASE2, CASE3)
BATCH_SEEDS = range(10)


def record(k: int, ok: bool, detail: str) -> None:
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[k] = line
    print(line)


# 1 ---------------------------------------------------------------------------

def test_criterion_01_bounds_and_optima():
    bad = []
    for name in FIXTURES:
        m = build_pq(load_fixture(name))
        pq = build_relaxation(m, "pq").bound
        cj = build_relaxation(m, "cjjj").bound
        opt = solve_global(m, use_cjjj_root=True).objective
        if abs(pq - PQ_BOUND[name]) > REL_TOL * abs(PQ_BOUND[name]):
            bad.append(f"{name} pq {pq:.4f}")
        if abs(cj - CJJJ_BOUND[name]) > CJJJ_ABS:
            bad.append(f"{name} cjjj {cj:.4f}")
        if abs(opt - OPT[name]) > REL_TOL * abs(OPT[name]):
            bad.append(f"{name} opt {opt:.4f}")
    record(1, not bad, "pq/cjjj/opt on 4 fixtures" + (f"; off: {bad}" if bad else ""))
    assert not bad


# 2 ---------------------------------------------------------------------------

def test_criterion_02_gap_columns():
    rep = run_suite([(n, load_fixture(n)) for n in FIXTURES])
    got = {(r.instance, r.mode): r for r in rep.records}
    bad = []
    for n in FIXTURES:
        g = got[n, "pq"].root_gap
        c = got[n, "cjjj"].closed_gap
        if abs(g - GAP[n]) > PCT_ABS or abs(c - CLOSED[n]) > PCT_ABS:
            bad.append(f"{n} gap {g:.2f} closed {c:.2f}")
    # the formulas themselves, on the reference numbers
    assert abs(gap(-750, -800) - 6.7) <= PCT_ABS
    assert abs(closed_gap(-750, -800, -2375 / 3) - 16.7) <= PCT_ABS
    record(2, not bad, "Gap and Closed columns" + (f"; off: {bad}" if bad else ""))
    assert not bad


# 3 ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_03_hull_certification():
    parts, ok = [], True
    for k, case in enumerate(CASES):
        rep = certify_case(case, draws=100, objectives=100, seed=1000 + k)
        rate = rep.pass_rate(HULL_TOL)
        worst = max(c.gap for c in rep.certificates)
        good = rate >= HULL_PASS and rep.seconds <= HULL_SECONDS
        ok &= good
        parts.append(f"{case} {100 * rate:.2f}% worst {worst:.1e} {rep.seconds:.0f}s")
    record(3, ok, "; ".join(parts))
    assert ok


# 4 ---------------------------------------------------------------------------

def _t_points(p, n, rng):
    """Points of T with extra mass on its boundary pieces."""
    out = []
    while sum(len(a) for a in out) < n:
        m = 2 * n
        x = rng.uniform(0, 1, m)
        x[rng.random(m) < 0.05] = 0.0
        x[rng.random(m) < 0.05] = 1.0
        t = rng.uniform(p.gamma_lo, p.gamma_hi, m)
        t[rng.random(m) < 0.05] = p.gamma_lo
        t[rng.random(m) < 0.05] = p.gamma_hi
        u = x * t
        z = rng.uniform(0, 1, m) * (1 - x)
        z[rng.random(m) < 0.1] = 0.0
        top = rng.random(m) < 0.1
        z[top] = 1 - x[top]
        ylo = p.beta_lo * z
        yhi = np.minimum(p.beta_hi * z, -u)
        y = ylo + rng.uniform(0, 1, m) * (yhi - ylo)
        s = rng.random(m)
        y = np.where(s < 0.2, yhi, np.where(s < 0.3, ylo, y))
        keep = yhi >= ylo
        out.append(np.column_stack([x, u, y, z, t])[keep])
    return np.vstack(out)[:n]


def test_criterion_04_validity_fuzz():
    rng = np.random.default_rng(44)
    worst = {f: 0.0 for f in (CONIC, YIKES, LIN20, LIN22, "gradient")}
    for d in range(50):
        p = random_params(CASES[d % 3], rng)
        P = _t_points(p, 10_000, rng)
        x, u, y, z, t = P.T
        for fam, (a, b) in ((LIN20, linear20(p)), (LIN22, linear22(p))):
            worst[fam] = max(worst[fam], float(np.max(P @ a - b)))
        if p.beta_lo < 0:
            worst[CONIC] = max(worst[CONIC], float(np.max(conic_violation(p, x, u, t))))
        if p.gamma_lo < 0:
            worst[YIKES] = max(worst[YIKES], float(np.max(yikes_violation(p, x, u, y, t))))
        for _ in range(40):
            xa = rng.uniform(0.01, 1)
            anchor = (xa, rng.uniform(p.gamma_lo * xa, p.gamma_hi * xa),
                      rng.uniform(-0.5, 1), 0.0, rng.uniform(p.gamma_lo, p.gamma_hi))
            for cut in (conic_cut(p, anchor) if p.beta_lo < 0 else None,
                        yikes_cut(p, anchor) if p.gamma_lo < 0 else None):
                if cut is not None:
                    worst["gradient"] = max(worst["gradient"], float(np.max(P @ cut[0] - cut[1])))
    ok = max(worst.values()) <= FUZZ_TOL
    record(4, ok, "max violation " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    assert ok


# 5 ---------------------------------------------------------------------------

ALL = [CONIC, YIKES, LIN20, LIN22]
# (case, dropped family): the conic family is inactive for gh < 0, LIN22 for gl < 0
# and LIN20 for gh > 0
REDUNDANT = [(CASE2, CONIC), (CASE1, LIN22), (CASE2, LIN22), (CASE1, LIN20), (CASE3, LIN20)]


def test_criterion_05_redundancy():
    rng = np.random.default_rng(55)
    parts, ok = [], True
    for case, drop in REDUNDANT:
        diff = 0.0
        for _ in range(50):
            p = random_params(case, rng)
            for _ in range(2):
                c = random_objective(rng)
                full = cutting_plane_max(p, c, members=ALL)
                less = cutting_plane_max(p, c, members=[f for f in ALL if f != drop])
                diff = max(diff, abs(full - less))
        ok &= diff <= REDUNDANT_TOL
        parts.append(f"{case}-{drop} {diff:.1e}")
    record(5, ok, "; ".join(parts))
    assert ok


# 6 ---------------------------------------------------------------------------

def test_criterion_06_graph_statistics():
    bad = []
    for copies in (10, 15, 20):
        for mult in range(1, 7):
            e = copies * mult
            inst = generate_random(GeneratorConfig(copies, e, seed=1))
            if (inst.num_nodes, inst.num_arcs) != (6 * copies, 6 * copies + e):
                bad.append((copies, e, inst.num_nodes, inst.num_arcs))
    record(6, not bad, "18 configs, |N| = 6c and |A| = 6c + |A+|" + (f"; off: {bad}" if bad else ""))
    assert not bad


# 7 and 8 ---------------------------------------------------------------------

def _run_batch(copies, solve_pq):
    rows = []
    for s in BATCH_SEEDS:
        m = build_pq(generate_random(GeneratorConfig(copies, copies, seed=s)))
        pq = build_relaxation(m, "pq")
        cj = build_relaxation(m, "cjjj")
        limit = 1000.0 if solve_pq else 30.0
        rc = solve_global(m, use_cjjj_root=True, relaxation=cj, time_limit=limit)
        rp = solve_global(m, relaxation=pq, time_limit=limit) if solve_pq else None
        best = min(r.objective for r in (rc, rp) if r is not None)
        rows.append(dict(seed=s, pq_bound=pq.bound, cj_bound=cj.bound, best=best,
                         pq_gap=gap(best, pq.bound), cj_gap=gap(best, cj.bound),
                         cj=node_statistics(rc), cj_status=rc.status,
                         pq=node_statistics(rp) if rp else None,
                         pq_status=rp.status if rp else None))
    return rows


@pytest.fixture(scope="module")
def batch10():
    return _run_batch(10, True)


@pytest.fixture(scope="module")
def batch20():
    return _run_batch(20, False)


@pytest.mark.slow
def test_criterion_07_bound_improvement(batch10, batch20):
    parts, ok = [], True
    strict = total = 0
    for copies, rows in ((10, batch10), (20, batch20)):
        strict += sum(r["cj_gap"] < r["pq_gap"] for r in rows)
        total += len(rows)
        mp = np.mean([r["pq_gap"] for r in rows])
        mc = np.mean([r["cj_gap"] for r in rows])
        red = 1 - mc / mp
        ok &= red >= GAP_REDUCTION
        parts.append(f"c{copies}: gap {mp:.2f}% -> {mc:.2f}% ({100 * red:.0f}% less)")
    share = strict / total
    ok &= share >= STRICT_SHARE
    slow = [r["seed"] for r in batch10
            if r["cj_status"] != "optimal" or r["cj"].seconds > SOLVE_SECONDS]
    ok &= not slow
    tmax = max(r["cj"].seconds for r in batch10)
    parts.append(f"strictly smaller {strict}/{total}; c10 cjjj solves max {tmax:.1f}s"
                 + (f", over limit: {slow}" if slow else ""))
    record(7, ok, "; ".join(parts))
    assert ok


@pytest.mark.slow
def test_criterion_08_node_counts(batch10):
    fewer = sum(r["cj"].nodes <= r["pq"].nodes for r in batch10)
    share = fewer / len(batch10)
    detail = ", ".join(f"{r['pq'].nodes}->{r['cj'].nodes}" for r in batch10)
    ok = share >= NODE_SHARE and all(r["pq_status"] == "optimal" for r in batch10)
    record(8, ok, f"cjjj nodes <= pq nodes on {fewer}/{len(batch10)} ({detail})")
    assert ok


# 9 ---------------------------------------------------------------------------

def _midpoint_gap(f, rng, n):
    y1, y2 = rng.uniform(-3, 3, (2, n))
    v1, v2 = rng.uniform(0, 3, (2, n))
    y1[: n // 10] = 0.0
    v2[: n // 10] = 0.0
    mid = f((y1 + y2) / 2, (v1 + v2) / 2)
    avg = (f(y1, v1) + f(y2, v2)) / 2
    scale = max(1.0, float(np.max(np.abs(mid))), float(np.max(np.abs(avg))))
    return mid - avg, MIDPOINT_SLACK * scale


def _fd_ok(F, a, point, coords):
    e = 1e-6
    for k in coords:
        hi, lo = list(point), list(point)
        hi[k] += e
        lo[k] -= e
        fd = (F(hi) - F(lo)) / (2 * e)
        if abs(a[k] - fd) > FD_REL * max(abs(fd), 1e-1):
            return False
    return True


def test_criterion_09_convexity_and_gradients():
    rng = np.random.default_rng(99)
    n = 10_000
    # g concave on y > 0
    y1, y2 = rng.uniform(1e-6, 5, (2, n))
    v1, v2 = rng.uniform(0, 5, (2, n))
    mid = g_func((y1 + y2) / 2, (v1 + v2) / 2)
    avg = (g_func(y1, v1) + g_func(y2, v2)) / 2
    g_ok = bool(np.all(mid >= avg - MIDPOINT_SLACK * max(1.0, float(np.max(np.abs(mid))))))
    h_ok = True
    for case, f in ((CASE1, h_func), (CASE1, h_envelope), (CASE2, h_envelope)):
        for _ in range(10):
            p = random_params(case, rng)
            d, slack = _midpoint_gap(lambda y, v: f(p, y, v), rng, n)
            h_ok &= bool(np.all(d <= slack))
    fd_ok = True
    for _ in range(200):
        y, v = rng.uniform(1e-3, 5, 2)
        gy, gv = g_grad(y, v)
        fd_ok &= _fd_ok(lambda q: float(g_func(q[0], q[1])), (gy, gv), (y, v), (0, 1))
    for case in CASES:
        for _ in range(20):
            p = random_params(case, rng)
            x = rng.uniform(0.05, 1)
            t = rng.uniform(p.gamma_lo, p.gamma_hi)
            pt = (x, x * t + rng.uniform(-0.1, 0.1), 0.0, 0.0, t)
            a, _ = conic_cut(p, pt)
            fd_ok &= _fd_ok(lambda q: float(conic_violation(p, q[0], q[1], q[4])), a, pt,
                            (0, 1, 4))
            if p.gamma_lo < 0:
                r, _ = h_kink(p)
                u = x * t
                pt = (x, u, max(r * (u - p.gamma_lo * x), 0.0) + rng.uniform(0.01, 1), 0.0, t)
                a, _ = yikes_cut(p, pt)
                fd_ok &= _fd_ok(lambda q: float(yikes_violation(p, q[0], q[1], q[2], q[4])),
                                a, pt, (0, 1, 2, 4))
    ok = g_ok and h_ok and fd_ok
    record(9, ok, f"g concave {g_ok}, h convex {h_ok}, gradients vs finite differences {fd_ok}")
    assert ok


# 10 --------------------------------------------------------------------------

def test_criterion_10_mccormick_tightness():
    rng = np.random.default_rng(10)
    checked = fails = 0
    worst = 0.0
    for case in CASES:
        for _ in range(5):
            res = mccormick_tightness_check(random_params(case, rng), 100,
                                            seed=int(rng.integers(2**31)), tol=TIGHT_TOL)
            for r in res:
                if r.boundary:
                    checked += 1
                    worst = max(worst, r.residual)
                    fails += not r.passed
    ok = fails == 0 and checked > 0
    record(10, ok, f"{checked} boundary vertices, worst |u - xt| {worst:.1e}")
    assert ok

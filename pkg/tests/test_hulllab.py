import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from poolrelax.aggregation import CASE1, CASE2, CASE3, TParams
from poolrelax.cuts import CONIC, LIN20, LIN22, YIKES
from poolrelax.hulllab import (CASE_RELAXATION, HullCertificate, SeparationError,
                               brute_force_batch, brute_force_max, certify_case,
                               cutting_plane_max, mccormick_tightness_check, monte_carlo_max,
                               random_objective, random_params, sample_T)

E_X = np.array([1.0, 0, 0, 0, 0])


def test_max_x_case1_is_one():
    p = TParams(-1.0, 1.0, -1.0, 1.0)
    val, pt = brute_force_max(p, E_X)
    assert val == pytest.approx(1.0, abs=1e-9)
    assert cutting_plane_max(p, E_X, "R1") == pytest.approx(1.0, abs=1e-9)


def test_max_x_case3_closed_form():
    # x = 1 is impossible when t > 0; the bound comes from bl (1 - x) <= -gl x
    p = TParams(0.5, 1.5, -2.0, 1.0)
    expect = 2.0 / (0.5 + 2.0)
    val, _ = brute_force_max(p, E_X)
    assert val == pytest.approx(expect, abs=1e-5)
    assert cutting_plane_max(p, E_X, "R3") == pytest.approx(expect, abs=1e-9)
    assert cutting_plane_max(p, E_X, "R0") == pytest.approx(expect, abs=1e-9)


def test_brute_force_point_is_in_T():
    rng = np.random.default_rng(0)
    p = random_params(CASE1, rng)
    C = np.array([random_objective(rng) for _ in range(10)])
    vals, pts = brute_force_batch(p, C)
    for c, v, (x, u, y, z, t) in zip(C, vals, pts):
        assert np.dot(c, (x, u, y, z, t)) == pytest.approx(v, abs=1e-12)
        assert u == pytest.approx(x * t, abs=1e-12)
        assert y + u <= 1e-12 and z + x <= 1 + 1e-12 and z >= -1e-12
        assert p.beta_lo * z - 1e-12 <= y <= p.beta_hi * z + 1e-12


def test_monte_carlo_cross_check():
    rng = np.random.default_rng(1)
    p = random_params(CASE1, rng)
    for _ in range(3):
        c = random_objective(rng)
        bf, _ = brute_force_max(p, c)
        mc = monte_carlo_max(p, c, 10**6, seed=2)
        assert mc <= bf + 1e-12
        assert bf - mc <= 1e-4


def test_sample_T_membership():
    rng = np.random.default_rng(2)
    p = random_params(CASE2, rng)
    P = sample_T(p, 5000, rng)
    x, u, y, z, t = P.T
    assert np.allclose(u, x * t)
    assert np.all(y + u <= 1e-12) and np.all(z + x <= 1 + 1e-12)


def test_r1_inside_r0():
    rng = np.random.default_rng(3)
    p = random_params(CASE1, rng)
    for _ in range(30):
        c = random_objective(rng)
        assert cutting_plane_max(p, c, "R1") <= cutting_plane_max(p, c, "R0") + 1e-9


@pytest.mark.parametrize("case", [CASE1, CASE2, CASE3])
def test_hull_equivalence_small(case):
    rep = certify_case(case, draws=3, objectives=20, seed=11)
    assert rep.failures == 0
    assert max(c.gap for c in rep.certificates) <= 1e-3
    # the cutting-plane value is an outer bound up to the separation tolerance
    for c in rep.certificates:
        assert c.cutting_plane >= c.brute_force - 1e-7


def test_wrong_relaxation_overshoots_in_case3():
    rng = np.random.default_rng(4)
    p = random_params(CASE3, rng)
    C = np.array([random_objective(rng) for _ in range(100)])
    bf, _ = brute_force_batch(p, C)
    over = [cutting_plane_max(p, c, "R1") - b for c, b in zip(C, bf)]
    assert max(over) > 1e-3
    assert min(over) >= -1e-7


ALL = [CONIC, YIKES, LIN20, LIN22]


@pytest.mark.parametrize("case, drop", [(CASE2, CONIC), (CASE1, LIN22), (CASE2, LIN22),
                                        (CASE1, LIN20), (CASE3, LIN20)])
def test_redundant_members_small(case, drop):
    rng = np.random.default_rng(5)
    for _ in range(5):
        p = random_params(case, rng)
        for _ in range(5):
            c = random_objective(rng)
            full = cutting_plane_max(p, c, members=ALL)
            less = cutting_plane_max(p, c, members=[f for f in ALL if f != drop])
            assert less == pytest.approx(full, abs=1e-9)


def test_members_needed_somewhere():
    # dropping a nonredundant member changes the value for some objective
    rng = np.random.default_rng(6)
    p = random_params(CASE1, rng)
    diffs = []
    for _ in range(50):
        c = random_objective(rng)
        diffs.append(cutting_plane_max(p, c, "R0") - cutting_plane_max(p, c, "R1"))
    assert max(diffs) > 1e-4


def test_round_cap_raises():
    rng = np.random.default_rng(7)
    p = random_params(CASE1, rng)
    raised = 0
    for _ in range(40):
        try:
            cutting_plane_max(p, random_objective(rng), "R1", max_rounds=0)
        except SeparationError:
            raised += 1
    assert raised > 0


@pytest.mark.parametrize("case", [CASE1, CASE2, CASE3])
def test_mccormick_tightness(case):
    p = random_params(case, np.random.default_rng(8))
    res = mccormick_tightness_check(p, 100, seed=9)
    assert all(r.passed for r in res)
    assert sum(r.boundary for r in res) > 0


def test_certificate_json():
    rep = certify_case(CASE1, draws=1, objectives=3, seed=0)
    lines = rep.jsonl().splitlines()
    assert len(lines) == 3
    obj = json.loads(lines[0])
    assert set(obj) == {"params", "case", "objective", "brute_force", "cutting_plane",
                        "relaxation", "gap"}
    assert obj["relaxation"] == CASE_RELAXATION[CASE1]
    c = HullCertificate({}, CASE1, [1.0], 1.0, 1.5, "R1")
    assert c.gap == 0.5


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32), case=st.sampled_from([CASE1, CASE2, CASE3]))
def test_random_params_ranges(seed, case):
    p = random_params(case, np.random.default_rng(seed))
    assert p.case == case
    assert -2 <= p.gamma_lo < p.gamma_hi <= 2
    assert p.gamma_hi - p.gamma_lo >= 0.05
    assert -2 <= p.beta_lo < 0 < p.beta_hi <= 2


def test_unit_objectives():
    rng = np.random.default_rng(10)
    for _ in range(20):
        assert np.linalg.norm(random_objective(rng)) == pytest.approx(1.0)

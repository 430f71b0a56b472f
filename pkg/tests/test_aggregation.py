import math

import numpy as np
import pytest

from conftest import feasible_points
from poolrelax.aggregation import (CASE1, CASE2, CASE3, DEGENERATE, TParams, classify,
                                   enumerate_triples, output_scale, scale_context)
from poolrelax.instance import haverly, load_fixture
from poolrelax.pqmodel import build_pq


@pytest.mark.parametrize("args, case", [
    ((-1, 1, -1, 1), CASE1),
    ((-2, -1, -1, 1), CASE2),
    ((1, 2, -1, 1), CASE3),
    ((-1, 1, 0.5, 1), DEGENERATE),   # no negative by-pass excess
    ((1, 1, -1, 1), DEGENERATE),     # single pool excess value
])
def test_classify(args, case):
    assert classify(*args) == case
    assert classify(*args, has_bypass=False) == DEGENERATE


def test_tparams_order_checked():
    with pytest.raises(ValueError):
        TParams(1.0, 0.0, -1.0, 1.0)


def test_haverly1_contexts():
    m = build_pq(haverly(1))
    lp = m.lp.copy()
    ctx = {c.output: c for c in enumerate_triples(m, lp)}
    assert set(ctx) == {"X", "Y"}
    x = ctx["X"]
    # pool inputs A (3) and B (1) against bound 2.5; by-pass C (2)
    assert (x.params.gamma_lo, x.params.gamma_hi) == (-1.5, 0.5)
    assert x.params.beta_lo == x.params.beta_hi == -0.5
    assert x.scale == output_scale(m, "X") == 100.0
    assert ctx["Y"].scale == 200.0
    for c in ctx.values():
        for col in c.columns:
            assert lp.has_column(col)


def test_scale_context_rescales_inequality():
    m = build_pq(haverly(1))
    c = enumerate_triples(m, m.lp.copy())[0]
    c2 = scale_context(c, 2 * c.scale)
    coefs, rhs = c2.unscale_inequality([1, 0, 0, 0, 1], 1.0)
    assert rhs == pytest.approx(2 * c.scale)
    assert coefs[c.t] == pytest.approx(2 * c.scale)
    with pytest.raises(ValueError):
        scale_context(c, 0.0)


def test_feasible_points_map_into_T(fixture_model):
    """u = x t and the linear description of T hold at every feasible point."""
    m = fixture_model
    base = m.lp.copy()
    contexts = enumerate_triples(m, base)
    rng = np.random.default_rng(0)
    pts = feasible_points(m, rng, 6, base=base)
    assert pts
    for _, vals in pts:
        for c in contexts:
            x, u, y, z, t = c.scaled_point(vals)
            p = c.params
            tol = 1e-7
            assert u == pytest.approx(x * t, abs=tol)
            assert y + u <= tol
            assert z + x <= 1 + tol
            assert p.beta_lo * z - tol <= y <= p.beta_hi * z + tol
            assert p.gamma_lo - tol <= t <= p.gamma_hi + tol
            assert -tol <= x <= 1 + tol


def test_bental4_triples():
    m = build_pq(load_fixture("bental4"))
    ctx = {c.output: c for c in enumerate_triples(m, m.lp.copy())}
    # single by-pass input per output, so both triples are outside the three cases
    assert ctx["X"].params == TParams(-1.5, 0.5, -0.5, -0.5)
    assert ctx["Y"].params == TParams(-0.5, 1.5, 0.5, 0.5)
    assert {c.case_tag for c in ctx.values()} == {DEGENERATE}


def test_triples_on_random_instance(small_random_model):
    m = small_random_model
    ctx = enumerate_triples(m, m.lp.copy())
    n_arcs = sum(len(m.instance.successors(l)) for l in m.instance.pools)
    assert len(ctx) == n_arcs * len(m.instance.attributes)
    assert all(math.isfinite(c.scale) and c.scale > 0 for c in ctx)

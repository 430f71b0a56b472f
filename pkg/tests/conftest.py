import numpy as np
import pytest

from poolrelax.instance import GeneratorConfig, generate_random, load_fixture
from poolrelax.lpcore import solve
from poolrelax.pqmodel import build_mccormick_lp, build_pq, values_dict


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE: dict[int, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running (minutes)")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])


def feasible_points(model, rng, count=5, base=None):
    """Feasible pq points: fix q at random simplex points (McCormick is then
    exact) and solve the LP for a random cost vector."""
    out = []
    for _ in range(count * 4):
        box = {}
        for l in model.instance.pools:
            keys = [k for k in model.q_cols if k[1] == l]
            q = rng.dirichlet(np.ones(len(keys)))
            for k, v in zip(keys, q):
                box[k] = (float(v), float(v))
        lp = build_mccormick_lp(model, box, base=base)
        for c in model.x_cols.values():
            lp.set_cost(c, float(rng.normal()))
        sol = solve(lp)
        if sol.optimal:
            out.append((lp, values_dict(lp, sol.x)))
        if len(out) >= count:
            break
    return out


@pytest.fixture(params=["haverly1", "haverly2", "haverly3", "bental4"])
def fixture_model(request):
    return build_pq(load_fixture(request.param))


@pytest.fixture
def small_random_model():
    return build_pq(generate_random(GeneratorConfig(3, 4, seed=5)))

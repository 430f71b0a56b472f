"""The five-variable set T, its relaxations and the numerical hull check.

A grid oracle maximizes a linear objective over T exactly up to grid
resolution; the cutting-plane value over the case-matching relaxation
should agree with it."""

import numpy as np

from poolrelax.aggregation import CASE1, CASE2, CASE3, TParams
from poolrelax.cuts import h_envelope, h_func, h_kink
from poolrelax.hulllab import (CASE_RELAXATION, brute_force_max, certify_case,
                               cutting_plane_max, random_objective, random_params)

rng = np.random.default_rng(0)
for case in (CASE1, CASE2, CASE3):
    p = random_params(case, rng)
    rel = CASE_RELAXATION[case]
    print(f"{case}: {p}")
    for _ in range(3):
        c = random_objective(rng)
        bf, _ = brute_force_max(p, c)
        print(f"   oracle {bf:+.6f}  {rel} {cutting_plane_max(p, c, rel):+.6f}  "
              f"R0 {cutting_plane_max(p, c, 'R0'):+.6f}")

# A small certification run; the CLI hull-check runs the full 100 x 100
rep = certify_case(CASE2, draws=5, objectives=20, seed=3)
print(f"{rep.case}: pass rate {rep.pass_rate(1e-3):.3f}, "
      f"worst gap {max(c.gap for c in rep.certificates):.2e}, {rep.seconds:.1f}s")

# When gh < 0 the function behind the second nonlinear family is not convex
# near y = 0; its convex envelope is constant below the kink y = r v.
p = TParams(-1.5, -0.5, -1.0, 1.0)
r, c = h_kink(p)
y = np.linspace(-0.5, 1.0, 7)
print("kink ratio", round(r, 4), "value", round(c, 4))
print("h        ", np.round(h_func(p, y, np.ones_like(y)), 4))
print("envelope ", np.round(h_envelope(p, y, np.ones_like(y)), 4))

# Soft diagnostic: the hull of T is not a polyhedron. The number of distinct
# optimal points of the cutting-plane closure keeps growing with the number
# of objectives instead of settling at a vertex count.
p = random_params(CASE1, np.random.default_rng(1))
rng = np.random.default_rng(2)
seen = set()
for k in range(1, 401):
    res = cutting_plane_max(p, random_objective(rng), "R1", detail=True)
    seen.add(tuple(np.round(res.point, 5)))
    if k in (25, 50, 100, 200, 400):
        print(f"{k:4d} objectives -> {len(seen):4d} distinct optimal points")

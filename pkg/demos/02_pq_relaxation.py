"""The pq-formulation and its McCormick LP relaxation, solved with the
built-in simplex and cross-checked against HiGHS."""

from poolrelax.instance import load_fixture
from poolrelax.lpcore import solve, write_mps
from poolrelax.pqmodel import build_mccormick_lp, build_pq, evaluate_pq

for name in ("haverly1", "haverly2", "haverly3", "bental4"):
    model = build_pq(load_fixture(name))
    lp = build_mccormick_lp(model)
    own = solve(lp)
    ref = solve(lp, backend="highs")
    print(f"{name:9s} cols={lp.num_cols:3d} rows={lp.num_rows:3d} "
          f"simplex={own.objective:9.3f} highs={ref.objective:9.3f}")

# The relaxation point usually violates w = q x; the evaluator says where
model = build_pq(load_fixture("haverly1"))
lp = build_mccormick_lp(model)
sol = solve(lp)
point = {n: sol[n] for n in lp.col_names}
for problem in evaluate_pq(model, point):
    print("  ", problem)

# Narrower proportion boxes give tighter McCormick envelopes
box = {("A", "P"): (0.0, 0.5)}
print("bound with q:A:P <= 0.5:", solve(build_mccormick_lp(model, box)).objective)

# Any relaxation can be written as fixed-format MPS
print(write_mps(lp).splitlines()[0], "...", len(write_mps(lp).splitlines()), "lines")

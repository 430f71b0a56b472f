"""The bounded revised simplex underneath everything: a tiny LP, warm
starts after adding a cut, and a timing comparison with HiGHS."""

import time

from poolrelax.instance import GeneratorConfig, generate_random
from poolrelax.lpcore import LinearProgram, solve
from poolrelax.pqmodel import build_mccormick_lp, build_pq

lp = LinearProgram("toy")
lp.add_column("a", 0, 4, cost=-3)
lp.add_column("b", 0, 3, cost=-2)
lp.add_row("sum", {"a": 1, "b": 1}, "<=", 5)
sol = solve(lp)
print(sol.status, sol.objective, sol["a"], sol["b"], "dual of sum:", sol.dual("sum"))

# Warm start: add a row and reuse the previous basis
lp.add_row("cut", {"a": 2, "b": 1}, "<=", 8)
warm = solve(lp, basis=sol.basis)
print("after cut:", warm.objective, "iterations:", warm.iterations)

model = build_pq(generate_random(GeneratorConfig(10, 20, seed=0)))
big = build_mccormick_lp(model)
for backend in ("simplex", "highs"):
    t0 = time.perf_counter()
    s = solve(big, backend=backend)
    print(f"{backend:8s} {big.num_cols} cols {big.num_rows} rows -> {s.objective:.4f} "
          f"in {time.perf_counter() - t0:.2f}s")

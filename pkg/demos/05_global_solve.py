"""Spatial branch-and-bound on the proportions, with and without the
strengthened root relaxation."""

from poolrelax.globalsolve import node_statistics, solve_global
from poolrelax.instance import GeneratorConfig, generate_random, load_fixture
from poolrelax.pqmodel import build_pq, evaluate_pq

for name in ("haverly1", "haverly2", "haverly3", "bental4"):
    model = build_pq(load_fixture(name))
    for cjjj in (False, True):
        res = solve_global(model, use_cjjj_root=cjjj)
        st = node_statistics(res)
        print(f"{name:9s} {res.mode:4s} opt={res.objective:9.3f} root={res.root_bound:9.3f} "
              f"gap={st.root_gap:5.1f}% nodes={st.nodes:4d} {st.seconds:.2f}s")

# The incumbent passes an independent check of all constraints with w = q x
model = build_pq(load_fixture("haverly3"))
res = solve_global(model, use_cjjj_root=True)
print("evaluator problems:", evaluate_pq(model, res.incumbent))
flows = {k: v for k, v in res.incumbent.items() if k.startswith("x:") and v > 1e-9}
print("flows:", {k: round(v, 3) for k, v in sorted(flows.items())})

# A generated instance with three Haverly copies; the trace has one entry per node
model = build_pq(generate_random(GeneratorConfig(3, 3, seed=4)))
for cjjj in (False, True):
    trace = []
    res = solve_global(model, use_cjjj_root=cjjj, trace=trace)
    print(f"random {res.mode:4s} {res.status} opt={res.objective:.3f} nodes={res.nodes} "
          f"first entries={trace[:2]}")

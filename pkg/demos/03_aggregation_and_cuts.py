"""Aggregated quality variables per (attribute, pool, output) triple, the
sign cases that decide which inequalities apply, and root separation."""

from collections import Counter

from poolrelax.aggregation import enumerate_triples
from poolrelax.cuts import cut_pool_csv
from poolrelax.globalsolve import build_relaxation
from poolrelax.instance import load_fixture
from poolrelax.pqmodel import build_pq

model = build_pq(load_fixture("haverly3"))
# pass a copy so model.lp stays the plain pq relaxation
for ctx in enumerate_triples(model, model.lp.copy()):
    p = ctx.params
    print(f"{ctx.label:10s} gamma=[{p.gamma_lo:+.2f}, {p.gamma_hi:+.2f}] "
          f"beta=[{p.beta_lo:+.2f}, {p.beta_hi:+.2f}] case={p.case} scale={ctx.scale:g}")

pq = build_relaxation(model, "pq")
cj = build_relaxation(model, "cjjj")
rep = cj.report
print(f"pq bound {pq.bound:.4f}  strengthened bound {cj.bound:.4f}")
print(f"{rep.rounds} separation rounds, status {rep.status}")
print("cuts per family:", dict(rep.cuts_per_family))
print("bound per round:", [round(v, 3) for v in rep.trace])

# The cut pool can be exported for inspection
lines = cut_pool_csv(rep.cuts).splitlines()
print(lines[0])
for line in lines[1:4]:
    print(line[:100])
print("families in pool:", Counter(c.family for c in rep.cuts))

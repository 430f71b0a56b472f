"""Benchmark tables: gap, closed gap and shifted geometric means over a
suite of instances, as printed by the report command."""

from poolrelax.instance import GeneratorConfig, generate_random, load_fixture
from poolrelax.report import closed_gap, gap, run_suite, shifted_geomean

print("gap(-400, -500)          =", gap(-400, -500))
print("closed(-750, -800, -791.7) =", round(closed_gap(-750, -800, -791.7), 2))
print("sgm([10, 1000], shift 2) =", round(shifted_geomean([10, 1000], 2), 3))

fixtures = [(n, load_fixture(n)) for n in ("haverly1", "haverly2", "haverly3", "bental4")]
print(run_suite(fixtures).to_text())

# Generated instances are grouped by copies and added edges; root bounds only
batch = [(f"random_c3_e{e}_s{s}", generate_random(GeneratorConfig(3, e, seed=s)))
         for e in (3, 6) for s in range(3)]
rep = run_suite(batch, solve=False)
head, rows = rep.group_table()
print(head)
for row in rows:
    print(row)

# The same tables from the shell:
#   python -m poolrelax gen --copies 10 --edges 10 --seed 1 --count 10 -o runs/
#   python -m poolrelax report --dir runs/ --csv runs/table.csv

import csv
import io
import math

import pytest
from hypothesis import given, settings, strategies as st

from poolrelax.instance import GeneratorConfig, generate_random, load_fixture
from poolrelax.report import (NA, RunRecord, aggregate, closed_gap, fill_gaps, gap, group_of,
                              run_suite, shifted_geomean)


def test_gap_examples():
    assert gap(-400, -500) == pytest.approx(25.0)
    assert gap(-600, -1000) == pytest.approx(66.7, abs=0.05)
    assert gap(-400, -400) == 0.0
    assert math.isnan(gap(0.0, -1.0))


def test_closed_gap_examples():
    assert 16.6 - 1e-9 <= closed_gap(-750, -800, -791.7) <= 16.7
    assert closed_gap(-549.8, -766.3, -697.0) == pytest.approx(32.0, abs=0.05)
    assert closed_gap(-400, -500, -400) == pytest.approx(100.0)
    assert math.isnan(closed_gap(-400, -400, -400))


def test_shifted_geomean_examples():
    assert shifted_geomean([10, 1000], 2) == pytest.approx(
        math.exp((math.log(12) + math.log(1002)) / 2) - 2)
    assert shifted_geomean([0, 0], 2) == pytest.approx(0.0, abs=1e-15)
    assert math.isnan(shifted_geomean([], 2))
    with pytest.raises(ValueError):
        shifted_geomean([-1.0], 2)


@settings(max_examples=100, deadline=None)
@given(v=st.floats(0, 1e6), s=st.sampled_from([2.0, 100.0]))
def test_shifted_geomean_single_value(v, s):
    assert shifted_geomean([v], s) == pytest.approx(v, rel=1e-12, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(vals=st.lists(st.floats(0, 1e5), min_size=1, max_size=20))
def test_shifted_geomean_between_min_and_max(vals):
    g = shifted_geomean(vals, 2.0)
    assert min(vals) - 1e-6 <= g <= max(vals) + 1e-6


def test_group_of():
    assert group_of("random_c10_e20_s3") == "c10_e20"
    assert group_of("haverly1") == "fixtures"


def test_fill_gaps_uses_best_primal_over_modes():
    recs = [RunRecord("a", "pq", -800.0, -740.0), RunRecord("a", "cjjj", -791.7, -750.0)]
    fill_gaps(recs)
    assert all(r.best_primal == -750.0 for r in recs)
    assert recs[0].root_gap == pytest.approx(100 * 50 / 750)
    assert recs[1].closed_gap == pytest.approx(16.6, abs=0.1)
    assert math.isnan(recs[0].closed_gap)


def test_aggregate_restricts_nodes_to_both_finished():
    recs = [RunRecord("x", "pq", -1, -1, nodes=1000, status="limit", group="g"),
            RunRecord("x", "cjjj", -1, -1, nodes=10, group="g"),
            RunRecord("y", "pq", -1, -1, nodes=50, group="g"),
            RunRecord("y", "cjjj", -1, -1, nodes=5, group="g")]
    rows = {r.mode: r for r in aggregate(recs)}
    assert rows["pq"].limits == 1 and rows["cjjj"].limits == 0
    assert rows["pq"].both_finished == 1
    assert rows["pq"].nodes_sgm == pytest.approx(50.0)
    assert rows["cjjj"].nodes_sgm == pytest.approx(5.0)


def test_empty_suite():
    rep = run_suite([])
    assert rep.records == [] and rep.groups == []
    assert "instance" in rep.to_text()


def _fixture_suite():
    names = ["haverly1", "haverly2", "haverly3", "bental4"]
    return run_suite([(n, load_fixture(n)) for n in names])


def test_fixture_suite_table():
    rep = _fixture_suite()
    got = {(r.instance, r.mode): r for r in rep.records}
    expect = {"haverly1": (25.0, 100.0), "haverly2": (66.7, 100.0),
              "haverly3": (6.7, 16.7), "bental4": (22.2, 100.0)}
    for name, (g, closed) in expect.items():
        assert got[name, "pq"].root_gap == pytest.approx(g, abs=0.1)
        assert got[name, "cjjj"].closed_gap == pytest.approx(closed, abs=0.1)
    assert [g.group for g in rep.groups] == ["fixtures", "fixtures"]


def test_csv_and_text_carry_the_same_numbers():
    rep = _fixture_suite()
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    text_rows = [line.split() for line in rep.to_text().splitlines() if line.strip()]
    csv_rows = [r for r in rows if r]
    assert csv_rows == text_rows
    assert any(NA in r for r in csv_rows)  # pq rows have no closed gap


def test_generated_groups_and_reproducibility():
    insts = [(f"random_c3_e{e}_s1", generate_random(GeneratorConfig(3, e, seed=1)))
             for e in (3, 6)]
    a = run_suite(insts, solve=False)
    b = run_suite(insts, solve=False)
    assert [g.group for g in a.groups] == ["c3_e3", "c3_e3", "c3_e6", "c3_e6"]
    assert [r.root_bound for r in a.records] == [r.root_bound for r in b.records]


def test_parallel_matches_serial():
    insts = [(f"random_c3_e3_s{s}", generate_random(GeneratorConfig(3, 3, seed=s)))
             for s in range(2)]
    a = run_suite(insts, solve=False)
    b = run_suite(insts, solve=False, workers=2)
    assert [r.root_bound for r in a.records] == [r.root_bound for r in b.records]

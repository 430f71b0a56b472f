import math

import pytest
from hypothesis import assume, given, settings, strategies as st

from poolrelax.instance import (FIXTURES, GeneratorConfig, InstanceError, POOL, format_instance,
                                generate_random, haverly, is_connected, load_fixture,
                                parse_instance, read_instance, validate, write_instance)

TINY = """
node A input capacity=inf
node P pool capacity=10
node X output capacity=5
arc A P cost=1
arc P X cost=-2 capacity=4
quality s A 1.5
bound s X 2
"""


def test_parse_tiny():
    inst = parse_instance(TINY, "tiny")
    assert inst.inputs == ["A"] and inst.pools == ["P"] and inst.outputs == ["X"]
    assert inst.arc_capacity("P", "X") == 4.0
    assert math.isinf(inst.arc_capacity("A", "P"))
    assert inst.gamma("s", "A", "X") == pytest.approx(-0.5)


@pytest.mark.parametrize("bad, msg", [
    ("node A input", "expected"),
    ("node A blender capacity=1", "unknown node kind"),
    ("node A input capacity=x", "expected a number"),
    ("frob A", "unknown directive"),
    ("node A input capacity=1\nnode A input capacity=1", "duplicate node"),
])
def test_parse_errors(bad, msg):
    with pytest.raises(InstanceError, match=msg):
        parse_instance(bad)


def test_validation_catches_pool_to_pool_and_missing_data():
    text = TINY + "node Q pool capacity=1\narc P Q cost=0\n"
    with pytest.raises(InstanceError, match="pool-to-pool"):
        parse_instance(text)
    with pytest.raises(InstanceError, match="missing bound"):
        parse_instance(TINY.replace("bound s X 2", ""))


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_round_trip(name, tmp_path):
    inst = load_fixture(name)
    assert validate(inst) == []
    path = tmp_path / f"{name}.pool"
    write_instance(inst, path)
    again = read_instance(path)
    assert format_instance(again) == format_instance(inst)


def test_fixture_sizes():
    for v in (1, 2, 3):
        inst = haverly(v)
        assert (inst.num_nodes, inst.num_arcs) == (6, 6)
    bt = load_fixture("bental4")
    assert bt.num_nodes == 7
    with pytest.raises(InstanceError):
        load_fixture("nope")


# |N| and |A| per (copies, added edges): 6 nodes and 6 arcs per copy
@pytest.mark.parametrize("copies, mult", [(c, m) for c in (10, 15, 20) for m in range(1, 7)])
def test_generator_graph_statistics(copies, mult):
    edges = copies * mult
    inst = generate_random(GeneratorConfig(copies, edges, seed=1))
    assert inst.num_nodes == 6 * copies
    assert inst.num_arcs == 6 * copies + edges
    assert is_connected(inst)
    assert validate(inst) == []


def test_generator_deterministic_and_seed_sensitive():
    a = format_instance(generate_random(GeneratorConfig(5, 7, seed=3)))
    b = format_instance(generate_random(GeneratorConfig(5, 7, seed=3)))
    c = format_instance(generate_random(GeneratorConfig(5, 7, seed=4)))
    assert a == b and a != c


def test_generator_few_edges_stay_disconnected():
    inst = generate_random(GeneratorConfig(4, 2, seed=0))
    assert not is_connected(inst)
    assert inst.num_arcs == 26


def test_generator_config_errors():
    with pytest.raises(InstanceError):
        GeneratorConfig(0, 0)
    with pytest.raises(InstanceError):
        GeneratorConfig(1, -1)
    with pytest.raises(InstanceError):
        generate_random(GeneratorConfig(1, 10**4))


@settings(max_examples=30, deadline=None)
@given(copies=st.integers(1, 6), extra=st.integers(0, 12), seed=st.integers(0, 2**32))
def test_generated_instances_are_valid(copies, extra, seed):
    # absent admissible arcs: 3c*c + c*2c + 3c*2c minus the 6c present
    assume(extra <= 11 * copies * copies - 6 * copies)
    inst = generate_random(GeneratorConfig(copies, extra, seed))
    assert validate(inst) == []
    assert sum(k == POOL for k in inst.kinds.values()) == copies
    # qualities scaled per copy by phi in [0.5, 2]: Haverly inputs have 1..3
    for v in inst.input_quality.values():
        assert 0.5 - 1e-12 <= v <= 6.0 + 1e-12
    assert parse_instance(format_instance(inst)).arcs == inst.arcs

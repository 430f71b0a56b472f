"""Pooling instances: the bundled fixtures, the text format and the
random generator built from copies of the small Haverly network."""

from poolrelax.instance import (GeneratorConfig, format_instance, generate_random,
                                is_connected, load_fixture, parse_instance, validate)

# The smallest fixture: two inputs, one pool, two outputs and one bypass.
inst = load_fixture("haverly1")
print(format_instance(inst))

# The text format round-trips exactly
again = parse_instance(format_instance(inst), name="copy")
print("round trip equal arcs:", again.arcs == inst.arcs)

# Random instances glue copies of the Haverly variants together and add
# random arcs. Node and arc counts only depend on copies and added edges.
for copies in (10, 15, 20):
    row = []
    for mult in range(1, 7):
        g = generate_random(GeneratorConfig(copies, copies * mult, seed=1))
        row.append(f"{g.num_nodes}/{g.num_arcs}")
    print(f"copies={copies:2d}  |N|/|A| by added edges:", "  ".join(row))

# With few added edges the graph may stay disconnected; validation still passes
g = generate_random(GeneratorConfig(3, 1, seed=0))
print(g.name, "connected:", is_connected(g), "problems:", validate(g))

"""Pooling instances: data model, text format, validation and generation.

Instance files are line oriented (``#`` starts a comment)::

    node <id> <input|pool|output> capacity=<float>
    arc <from> <to> cost=<float> [capacity=<float>]
    quality <attribute> <input-id> <float>
    bound <attribute> <output-id> <float>

Capacities may be ``inf``.  Output revenues are folded into the cost of the
arcs entering each output, so the objective is a plain sum of arc costs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

INPUT, POOL, OUTPUT = "input", "pool", "output"
KINDS = (INPUT, POOL, OUTPUT)


class InstanceError(ValueError):
    """Raised for malformed or invalid instance data."""


@dataclass(frozen=True)
class Arc:
    cost: float
    capacity: float | None = None


@dataclass(frozen=True)
class PoolingInstance:
    kinds: dict[str, str]
    node_capacity: dict[str, float]
    arcs: dict[tuple[str, str], Arc]
    input_quality: dict[tuple[str, str], float]
    output_upper: dict[tuple[str, str], float]
    name: str = ""
    _adj: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        succ = {n: [] for n in self.kinds}
        pred = {n: [] for n in self.kinds}
        for i, j in self.arcs:
            if i in succ and j in pred:
                succ[i].append(j)
                pred[j].append(i)
        object.__setattr__(self, "_adj", (succ, pred))

    @property
    def inputs(self) -> list[str]:
        return [n for n, k in self.kinds.items() if k == INPUT]

    @property
    def pools(self) -> list[str]:
        return [n for n, k in self.kinds.items() if k == POOL]

    @property
    def outputs(self) -> list[str]:
        return [n for n, k in self.kinds.items() if k == OUTPUT]

    @property
    def attributes(self) -> list[str]:
        seen = dict.fromkeys(k for k, _ in self.input_quality)
        seen.update(dict.fromkeys(k for k, _ in self.output_upper))
        return list(seen)

    @property
    def num_nodes(self) -> int:
        return len(self.kinds)

    @property
    def num_arcs(self) -> int:
        return len(self.arcs)

    def successors(self, node: str, kind: str | None = None) -> list[str]:
        out = self._adj[0][node]
        return out if kind is None else [n for n in out if self.kinds[n] == kind]

    def predecessors(self, node: str, kind: str | None = None) -> list[str]:
        out = self._adj[1][node]
        return out if kind is None else [n for n in out if self.kinds[n] == kind]

    def gamma(self, k: str, i: str, j: str) -> float:
        """Excess of attribute ``k`` of input ``i`` over the bound at output ``j``."""
        return self.input_quality[k, i] - self.output_upper[k, j]

    def arc_capacity(self, i: str, j: str) -> float:
        cap = self.arcs[i, j].capacity
        return math.inf if cap is None else cap


# -- text format -------------------------------------------------------------

def _parse_float(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise InstanceError(f"line {lineno}: expected a number, got {tok!r}") from None


def _kv(tok: str, key: str, lineno: int) -> float:
    prefix = key + "="
    if not tok.startswith(prefix):
        raise InstanceError(f"line {lineno}: expected {prefix}<float>, got {tok!r}")
    return _parse_float(tok[len(prefix):], lineno)


def parse_instance(text: str, name: str = "") -> PoolingInstance:
    kinds: dict[str, str] = {}
    caps: dict[str, float] = {}
    arcs: dict[tuple[str, str], Arc] = {}
    quality: dict[tuple[str, str], float] = {}
    bound: dict[tuple[str, str], float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        head = tok[0]
        if head == "node":
            if len(tok) != 4:
                raise InstanceError(f"line {lineno}: expected 'node <id> <kind> capacity=<float>'")
            nid, kind = tok[1], tok[2]
            if kind not in KINDS:
                raise InstanceError(f"line {lineno}: unknown node kind {kind!r}")
            if nid in kinds:
                raise InstanceError(f"line {lineno}: duplicate node {nid!r}")
            kinds[nid] = kind
            caps[nid] = _kv(tok[3], "capacity", lineno)
        elif head == "arc":
            if len(tok) not in (4, 5):
                raise InstanceError(
                    f"line {lineno}: expected 'arc <from> <to> cost=<float> [capacity=<float>]'")
            key = (tok[1], tok[2])
            if key in arcs:
                raise InstanceError(f"line {lineno}: duplicate arc {key}")
            cap = _kv(tok[4], "capacity", lineno) if len(tok) == 5 else None
            arcs[key] = Arc(_kv(tok[3], "cost", lineno), cap)
        elif head in ("quality", "bound"):
            if len(tok) != 4:
                raise InstanceError(f"line {lineno}: expected '{head} <attribute> <node> <float>'")
            target = quality if head == "quality" else bound
            target[tok[1], tok[2]] = _parse_float(tok[3], lineno)
        else:
            raise InstanceError(f"line {lineno}: unknown directive {head!r}")
    inst = PoolingInstance(kinds, caps, arcs, quality, bound, name=name)
    problems = validate(inst)
    if problems:
        raise InstanceError("invalid instance: " + "; ".join(problems))
    return inst


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return repr(float(v))


def format_instance(inst: PoolingInstance) -> str:
    lines = [f"# pooling instance {inst.name}".rstrip()]
    for n, kind in inst.kinds.items():
        lines.append(f"node {n} {kind} capacity={_fmt(inst.node_capacity[n])}")
    for (i, j), arc in inst.arcs.items():
        s = f"arc {i} {j} cost={_fmt(arc.cost)}"
        if arc.capacity is not None:
            s += f" capacity={_fmt(arc.capacity)}"
        lines.append(s)
    for (k, i), v in inst.input_quality.items():
        lines.append(f"quality {k} {i} {_fmt(v)}")
    for (k, j), v in inst.output_upper.items():
        lines.append(f"bound {k} {j} {_fmt(v)}")
    return "\n".join(lines) + "\n"


def read_instance(path: str | Path) -> PoolingInstance:
    path = Path(path)
    return parse_instance(path.read_text(encoding="utf-8"), name=path.stem)


def write_instance(inst: PoolingInstance, path: str | Path) -> None:
    Path(path).write_text(format_instance(inst), encoding="utf-8")


def validate(inst: PoolingInstance) -> list[str]:
    """Return descriptions of every violated invariant (empty if valid)."""
    out = []
    kinds = inst.kinds
    for n, kind in kinds.items():
        if kind not in KINDS:
            out.append(f"node {n}: unknown kind {kind!r}")
        cap = inst.node_capacity.get(n)
        if cap is None:
            out.append(f"node {n}: missing capacity")
        elif not cap >= 0:
            out.append(f"node {n}: negative capacity {cap}")
    allowed = {(INPUT, POOL), (POOL, OUTPUT), (INPUT, OUTPUT)}
    for (i, j), arc in inst.arcs.items():
        if i not in kinds or j not in kinds:
            out.append(f"arc ({i},{j}): unknown endpoint")
            continue
        pair = (kinds[i], kinds[j])
        if pair == (POOL, POOL):
            out.append(f"arc ({i},{j}): pool-to-pool arcs are not allowed")
        elif pair not in allowed:
            out.append(f"arc ({i},{j}): {pair[0]}-to-{pair[1]} arcs are not allowed")
        if arc.capacity is not None and not arc.capacity >= 0:
            out.append(f"arc ({i},{j}): negative capacity {arc.capacity}")
        if not math.isfinite(arc.cost):
            out.append(f"arc ({i},{j}): non-finite cost")
    for p in inst.pools:
        if not any(kinds.get(i) == INPUT for i in inst.predecessors(p)):
            out.append(f"pool {p}: no incoming arc")
        if not any(kinds.get(j) == OUTPUT for j in inst.successors(p)):
            out.append(f"pool {p}: no outgoing arc")
    for k in inst.attributes:
        for i in inst.inputs:
            if (k, i) not in inst.input_quality:
                out.append(f"missing quality for ({k},{i})")
        for j in inst.outputs:
            if (k, j) not in inst.output_upper:
                out.append(f"missing bound for ({k},{j})")
    for (k, n) in inst.input_quality:
        if kinds.get(n) != INPUT:
            out.append(f"quality ({k},{n}): {n} is not an input")
    for (k, n) in inst.output_upper:
        if kinds.get(n) != OUTPUT:
            out.append(f"bound ({k},{n}): {n} is not an output")
    return out


# -- Haverly family ----------------------------------------------------------

SULFUR = "sulfur"

# Haverly's network: inputs A, B feed the pool, C by-passes it.
# variant -> (costs of A,B,C; prices of X,Y; demand of X,Y)
HAVERLY = {
    1: dict(cost={"A": 6.0, "B": 16.0, "C": 10.0}, price={"X": 9.0, "Y": 15.0},
            demand={"X": 100.0, "Y": 200.0}),
    2: dict(cost={"A": 6.0, "B": 16.0, "C": 10.0}, price={"X": 9.0, "Y": 15.0},
            demand={"X": 600.0, "Y": 200.0}),
    3: dict(cost={"A": 6.0, "B": 13.0, "C": 10.0}, price={"X": 9.0, "Y": 15.0},
            demand={"X": 100.0, "Y": 200.0}),
}
HAVERLY_QUALITY = {"A": 3.0, "B": 1.0, "C": 2.0}
HAVERLY_BOUND = {"X": 2.5, "Y": 1.5}
HAVERLY_SUPPLY = math.inf
HAVERLY_POOL_CAP = math.inf
HAVERLY_ARCS = [("A", "P"), ("B", "P"), ("P", "X"), ("P", "Y"), ("C", "X"), ("C", "Y")]


@dataclass
class _Builder:
    kinds: dict = field(default_factory=dict)
    caps: dict = field(default_factory=dict)
    arcs: dict = field(default_factory=dict)
    quality: dict = field(default_factory=dict)
    bound: dict = field(default_factory=dict)
    unit_cost: dict = field(default_factory=dict)   # inputs
    price: dict = field(default_factory=dict)       # outputs

    def arc_cost(self, i, j):
        return self.unit_cost.get(i, 0.0) - self.price.get(j, 0.0)

    def add_arc(self, i, j):
        self.arcs[i, j] = Arc(self.arc_cost(i, j))

    def build(self, name):
        return PoolingInstance(dict(self.kinds), dict(self.caps), dict(self.arcs),
                               dict(self.quality), dict(self.bound), name=name)


def _add_haverly(b: _Builder, variant: int, prefix: str = "", phi: float = 1.0):
    data = HAVERLY[variant]
    for n in "ABC":
        b.kinds[prefix + n] = INPUT
        b.caps[prefix + n] = HAVERLY_SUPPLY
        b.unit_cost[prefix + n] = data["cost"][n]
        b.quality[SULFUR, prefix + n] = phi * HAVERLY_QUALITY[n]
    b.kinds[prefix + "P"] = POOL
    b.caps[prefix + "P"] = HAVERLY_POOL_CAP
    for n in "XY":
        b.kinds[prefix + n] = OUTPUT
        b.caps[prefix + n] = data["demand"][n]
        b.price[prefix + n] = data["price"][n]
        b.bound[SULFUR, prefix + n] = phi * HAVERLY_BOUND[n]
    for i, j in HAVERLY_ARCS:
        b.add_arc(prefix + i, prefix + j)


def haverly(variant: int) -> PoolingInstance:
    b = _Builder()
    _add_haverly(b, variant)
    return b.build(f"haverly{variant}")


def bental4() -> PoolingInstance:
    """Haverly 1 with a fourth, low-sulfur feed D into the pool.

    Its McCormick bound is -550 and its optimum -450.
    """
    b = _Builder()
    _add_haverly(b, 1)
    b.kinds["D"] = INPUT
    b.caps["D"] = HAVERLY_SUPPLY
    b.unit_cost["D"] = 15.5
    b.quality[SULFUR, "D"] = 1.0
    b.add_arc("D", "P")
    return b.build("bental4")


FIXTURES = ("haverly1", "haverly2", "haverly3", "bental4")


def load_fixture(name: str) -> PoolingInstance:
    """Load one of the bundled instances listed in :data:`FIXTURES`."""
    if name not in FIXTURES:
        raise InstanceError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    text = resources.files("poolrelax").joinpath("data", f"{name}.pool").read_text("utf-8")
    return parse_instance(text, name=name)


# -- random generator --------------------------------------------------------

@dataclass(frozen=True)
class GeneratorConfig:
    copies: int
    added_edges: int
    seed: int = 0
    phi_range: tuple[float, float] = (0.5, 2.0)

    def __post_init__(self):
        if self.copies < 1:
            raise InstanceError("copies must be a positive integer")
        if self.added_edges < 0:
            raise InstanceError("added_edges must be nonnegative")
        lo, hi = self.phi_range
        if not 0 < lo <= hi:
            raise InstanceError(f"bad phi_range {self.phi_range}")


class _Components:
    def __init__(self, nodes):
        self.parent = {n: n for n in nodes}
        self.count = len(self.parent)

    def find(self, n):
        while self.parent[n] != n:
            self.parent[n] = self.parent[self.parent[n]]
            n = self.parent[n]
        return n

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra
            self.count -= 1


def generate_random(config: GeneratorConfig) -> PoolingInstance:
    """Disjoint Haverly copies plus random admissible arcs.

    Each copy picks its Haverly variant uniformly and scales its qualities
    and bounds by a factor drawn uniformly from ``phi_range``.  Added arcs
    first join distinct connected components until the network is
    connected; the rest are uniform over all absent admissible pairs.
    Uses numpy's PCG64 generator seeded with ``config.seed``.
    """
    rng = np.random.Generator(np.random.PCG64(config.seed))
    variants = rng.integers(1, 4, size=config.copies)
    phis = rng.uniform(*config.phi_range, size=config.copies)
    b = _Builder()
    width = len(str(config.copies - 1))
    for c in range(config.copies):
        _add_haverly(b, int(variants[c]), prefix=f"h{c:0{width}d}", phi=float(phis[c]))

    nodes = list(b.kinds)
    ins = [n for n in nodes if b.kinds[n] == INPUT]
    pools = [n for n in nodes if b.kinds[n] == POOL]
    outs = [n for n in nodes if b.kinds[n] == OUTPUT]
    candidates = [(i, j) for src, dst in ((ins, pools), (pools, outs), (ins, outs))
                  for i in src for j in dst if (i, j) not in b.arcs]
    if config.added_edges > len(candidates):
        raise InstanceError(
            f"cannot add {config.added_edges} arcs: only {len(candidates)} admissible arcs absent")

    comps = _Components(nodes)
    for i, j in b.arcs:
        comps.union(i, j)
    chosen = set()
    for _ in range(config.added_edges):
        if comps.count > 1:
            pool = [a for a in candidates
                    if a not in chosen and comps.find(a[0]) != comps.find(a[1])]
        else:
            pool = [a for a in candidates if a not in chosen]
        i, j = pool[int(rng.integers(len(pool)))]
        chosen.add((i, j))
        comps.union(i, j)
        b.add_arc(i, j)
    return b.build(f"random_c{config.copies}_e{config.added_edges}_s{config.seed}")


def is_connected(inst: PoolingInstance) -> bool:
    comps = _Components(inst.kinds)
    for i, j in inst.arcs:
        comps.union(i, j)
    return comps.count <= 1

"""Aggregated single attribute / pool / output variables.

For each attribute ``k``, pool ``l`` and output ``j`` with arc ``l -> j``
the model gains

* ``z:l:j``   flow into ``j`` that does not pass through ``l``
* ``u:k:l:j`` excess of ``k`` at ``j`` contributed through ``l``
* ``y:k:l:j`` excess of ``k`` at ``j`` contributed by the by-pass
* ``t:k:l:j`` excess quality of the material in ``l`` relative to ``j``

linked to the pq variables by equality rows.  Together with ``x:l:j`` they
satisfy ``u = x t`` on every feasible pooling point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .instance import INPUT
from .lpcore import EQ, GE, LE, LinearProgram
from .pqmodel import PqModel, qname, wname, xname

CASE1, CASE2, CASE3, DEGENERATE = "Case1", "Case2", "Case3", "Degenerate"


@dataclass(frozen=True)
class TParams:
    """Parameters of the five-variable set (capacity scaled to one)."""

    gamma_lo: float
    gamma_hi: float
    beta_lo: float
    beta_hi: float

    def __post_init__(self):
        if self.gamma_lo > self.gamma_hi:
            raise ValueError("gamma_lo must not exceed gamma_hi")
        if self.beta_lo > self.beta_hi:
            raise ValueError("beta_lo must not exceed beta_hi")

    @property
    def case(self) -> str:
        return classify(self.gamma_lo, self.gamma_hi, self.beta_lo, self.beta_hi)


def classify(gamma_lo, gamma_hi, beta_lo, beta_hi, has_bypass=True) -> str:
    if gamma_lo == gamma_hi or not has_bypass or not (beta_lo < 0 < beta_hi):
        return DEGENERATE
    if gamma_lo < 0 < gamma_hi:
        return CASE1
    if gamma_hi < 0:
        return CASE2
    if gamma_lo > 0:
        return CASE3
    return DEGENERATE


@dataclass(frozen=True)
class TripleContext:
    attribute: str
    pool: str
    output: str
    params: TParams
    scale: float
    has_bypass: bool

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.attribute, self.pool, self.output)

    @property
    def label(self) -> str:
        return f"{self.attribute}:{self.pool}:{self.output}"

    @property
    def x(self) -> str:
        return xname(self.pool, self.output)

    @property
    def z(self) -> str:
        return f"z:{self.pool}:{self.output}"

    @property
    def u(self) -> str:
        return f"u:{self.label}"

    @property
    def y(self) -> str:
        return f"y:{self.label}"

    @property
    def t(self) -> str:
        return f"t:{self.label}"

    @property
    def columns(self) -> tuple[str, str, str, str, str]:
        """Model columns in (x, u, y, z, t) order."""
        return (self.x, self.u, self.y, self.z, self.t)

    @property
    def case_tag(self) -> str:
        p = self.params
        return classify(p.gamma_lo, p.gamma_hi, p.beta_lo, p.beta_hi, self.has_bypass)

    # scaled-space conversions; t is dimensionless and never scaled
    def scaled_point(self, values) -> tuple[float, float, float, float, float]:
        x, u, y, z, t = (float(values[c]) for c in self.columns)
        C = self.scale
        return (x / C, u / C, y / C, z / C, t)

    def unscale_inequality(self, coefs, rhs) -> tuple[dict[str, float], float]:
        """Map ``a . (x,u,y,z,t)_scaled <= b`` to model columns."""
        C = self.scale
        a = list(coefs)
        a[4] *= C
        return ({c: float(v) for c, v in zip(self.columns, a) if v != 0.0}, float(C * rhs))


def scale_context(ctx: TripleContext, scale: float) -> TripleContext:
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    return replace(ctx, scale=float(scale))


def bypass_inputs(model: PqModel, pool: str, j: str) -> list[str]:
    inst = model.instance
    out = []
    for src in inst.predecessors(j):
        if src == pool:
            continue
        if inst.kinds[src] == INPUT:
            out.append(src)
        else:
            out.extend(inst.predecessors(src, INPUT))
    return list(dict.fromkeys(out))


def output_scale(model: PqModel, j: str) -> float:
    """Bound C on total inflow to ``j`` (so that ``z + x <= C`` is valid)."""
    inst = model.instance
    cap = inst.node_capacity[j]
    upstream = 0.0
    for src in inst.predecessors(j):
        arc = inst.arc_capacity(src, j)
        upstream += min(arc, inst.node_capacity[src])
    return min(cap, upstream)


def enumerate_triples(model: PqModel, lp: LinearProgram | None = None) -> list[TripleContext]:
    """Append aggregated columns and linking rows to ``lp`` (default
    ``model.lp``) and return one context per (attribute, pool, output)."""
    inst = model.instance
    lp = model.lp if lp is None else lp
    contexts = []
    for l in inst.pools:
        pool_in = inst.predecessors(l, INPUT)
        for j in inst.successors(l):
            others = [s for s in inst.predecessors(j) if s != l]
            z = f"z:{l}:{j}"
            C = output_scale(model, j)
            if not (math.isfinite(C) and C > 0):
                C = 1.0 if C == 0 else C
            if not math.isfinite(C):
                raise ValueError(f"output {j}: no finite capacity bound")
            bypass = bypass_inputs(model, l, j)
            if not lp.has_column(z):
                if bypass:
                    lp.add_column(z, 0.0, math.inf)
                    coefs = {z: 1.0}
                    for s in others:
                        coefs[xname(s, j)] = -1.0
                    lp.add_row(f"zdef:{l}:{j}", coefs, EQ, 0.0)
                else:
                    lp.add_column(z, 0.0, 0.0)
            for k in inst.attributes:
                g = [inst.gamma(k, i, j) for i in pool_in]
                glo, ghi = min(g), max(g)
                if bypass:
                    b = [inst.gamma(k, i, j) for i in bypass]
                    blo, bhi = min(b), max(b)
                else:
                    blo = bhi = 0.0
                ctx = TripleContext(k, l, j, TParams(glo, ghi, blo, bhi), C, bool(bypass))
                u, y, t = ctx.u, ctx.y, ctx.t
                lp.add_column(u, -math.inf, math.inf)
                lp.add_column(t, glo, ghi)
                coefs = {u: 1.0}
                for i in pool_in:
                    coefs[wname(i, l, j)] = -inst.gamma(k, i, j)
                lp.add_row(f"udef:{ctx.label}", coefs, EQ, 0.0)
                coefs = {t: 1.0}
                for i in pool_in:
                    coefs[qname(i, l)] = -inst.gamma(k, i, j)
                lp.add_row(f"tdef:{ctx.label}", coefs, EQ, 0.0)
                if bypass:
                    lp.add_column(y, -math.inf, math.inf)
                    coefs = {y: 1.0}
                    for s in others:
                        if inst.kinds[s] == INPUT:
                            coefs[xname(s, j)] = -inst.gamma(k, s, j)
                        else:
                            for i in inst.predecessors(s, INPUT):
                                coefs[wname(i, s, j)] = -inst.gamma(k, i, j)
                    lp.add_row(f"ydef:{ctx.label}", coefs, EQ, 0.0)
                    lp.add_row(f"yub:{ctx.label}", {y: 1.0, z: -bhi}, LE, 0.0)
                    lp.add_row(f"ylb:{ctx.label}", {y: 1.0, z: -blo}, GE, 0.0)
                else:
                    lp.add_column(y, 0.0, 0.0)
                contexts.append(ctx)
    return contexts

"""Fixed-format MPS export.

Names longer than eight characters are mangled deterministically to
``C0000001`` / ``R0000001`` style names; :func:`mangling_csv` renders the
``original,mangled`` table that accompanies the file.
"""

from __future__ import annotations

import math

from .lp import EQ, GE, LE, LinearProgram


def name_table(lp: LinearProgram) -> dict[str, dict[str, str]]:
    def mangle(names, prefix):
        out = {}
        used = set()
        for k, nm in enumerate(names, start=1):
            if len(nm) <= 8 and " " not in nm and nm not in used and not _looks_mangled(nm):
                out[nm] = nm
            else:
                out[nm] = f"{prefix}{k:07d}"
            used.add(out[nm])
        return out

    return {"columns": mangle(lp.col_names, "C"), "rows": mangle(lp.row_names, "R")}


def _looks_mangled(nm: str) -> bool:
    return len(nm) == 8 and nm[0] in "CR" and nm[1:].isdigit()


def _num(v: float) -> str:
    s = repr(float(v))
    if len(s) > 12:
        s = f"{v:.6g}"
    if s.endswith(".0"):
        s = s[:-2]
    return s


def _field(code: str, name1: str, name2: str = "", value: float | None = None,
           name3: str = "", value2: float | None = None) -> str:
    # fields start in columns 2, 5, 15, 25, 40, 50
    line = " " + code.ljust(2) + " " + name1.ljust(8)
    if name2 or value is not None:
        line += "  " + name2.ljust(8)
    if value is not None:
        line += "  " + _num(value).rjust(12)
    if name3:
        line += "   " + name3.ljust(8)
        if value2 is not None:
            line += "  " + _num(value2).rjust(12)
    return line.rstrip()


def write_mps(lp: LinearProgram) -> str:
    names = name_table(lp)
    cn, rn = names["columns"], names["rows"]
    out = [f"NAME          {lp.name[:8]}", "ROWS", " N  OBJ"]
    code = {LE: "L", GE: "G", EQ: "E"}
    for nm, s in zip(lp.row_names, lp.sense):
        out.append(_field(code[s], rn[nm]))
    out.append("COLUMNS")
    by_col: list[list[tuple[int, float]]] = [[] for _ in range(lp.num_cols)]
    for i, row in enumerate(lp.rows):
        for j, v in row.items():
            by_col[j].append((i, v))
    for j, nm in enumerate(lp.col_names):
        entries = []
        if lp.cost[j] != 0.0:
            entries.append(("OBJ", lp.cost[j]))
        entries += [(rn[lp.row_names[i]], v) for i, v in sorted(by_col[j])]
        if not entries:
            entries.append(("OBJ", 0.0))
        for k in range(0, len(entries), 2):
            (r1, v1), *rest = entries[k:k + 2]
            if rest:
                out.append(_field("", cn[nm], r1, v1, rest[0][0], rest[0][1]))
            else:
                out.append(_field("", cn[nm], r1, v1))
    out.append("RHS")
    for nm, b in zip(lp.row_names, lp.rhs):
        if b != 0.0:
            out.append(_field("", "RHS", rn[nm], b))
    out.append("BOUNDS")
    for nm, lo, up in zip(lp.col_names, lp.lower, lp.upper):
        c = cn[nm]
        if lo == up:
            out.append(_field("FX", "BND", c, lo))
            continue
        if math.isinf(lo) and math.isinf(up):
            out.append(_field("FR", "BND", c))
            continue
        if math.isinf(lo):
            out.append(_field("MI", "BND", c))
        elif lo != 0.0:
            out.append(_field("LO", "BND", c, lo))
        if not math.isinf(up):
            out.append(_field("UP", "BND", c, up))
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def mangling_csv(lp: LinearProgram) -> str:
    names = name_table(lp)
    lines = ["original,mangled"]
    for kind in ("columns", "rows"):
        for orig, new in names[kind].items():
            lines.append(f"{orig},{new}")
    return "\n".join(lines) + "\n"

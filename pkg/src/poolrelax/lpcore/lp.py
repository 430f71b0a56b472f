"""Sparse linear program container with named rows and columns."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

LE, EQ, GE = "<=", "=", ">="
_SENSES = (LE, EQ, GE)


class LpError(ValueError):
    pass


@dataclass
class Basis:
    """Simplex basis keyed by names so it survives appended rows/columns.

    ``basic`` holds ``("c", name)`` / ``("r", name)`` entries; ``at_upper``
    lists nonbasic variables resting on their upper bound.
    """

    basic: list[tuple[str, str]]
    at_upper: set[tuple[str, str]] = field(default_factory=set)


@dataclass
class LpSolution:
    status: str
    objective: float = math.nan
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    reduced_costs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    basis: Basis | None = None
    iterations: int = 0
    col_index: Mapping[str, int] = field(default_factory=dict)
    row_index: Mapping[str, int] = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def __getitem__(self, name: str) -> float:
        return float(self.x[self.col_index[name]])

    def dual(self, row: str) -> float:
        return float(self.duals[self.row_index[row]])


class LinearProgram:
    """Minimization LP ``min c'x  s.t.  rows (<=,=,>=) rhs,  lo <= x <= up``.

    Rows are stored sparsely as ``{column index: coefficient}`` dicts; a row
    never holds two entries for the same column.
    """

    def __init__(self, name: str = "lp"):
        self.name = name
        self.col_names: list[str] = []
        self.lower: list[float] = []
        self.upper: list[float] = []
        self.cost: list[float] = []
        self.row_names: list[str] = []
        self.sense: list[str] = []
        self.rhs: list[float] = []
        self.rows: list[dict[int, float]] = []
        self._cols: dict[str, int] = {}
        self._rows: dict[str, int] = {}
        self._row_keys: set[tuple] = set()

    # -- construction -----------------------------------------------------
    def add_column(self, name: str, lower: float = 0.0, upper: float = math.inf,
                   cost: float = 0.0) -> int:
        if name in self._cols:
            raise LpError(f"duplicate column name {name!r}")
        if lower > upper:
            raise LpError(f"column {name!r}: lower bound {lower} > upper bound {upper}")
        self._cols[name] = len(self.col_names)
        self.col_names.append(name)
        self.lower.append(float(lower))
        self.upper.append(float(upper))
        self.cost.append(float(cost))
        return self._cols[name]

    def add_row(self, name: str, coefs: Mapping[str, float] | Iterable[tuple[str, float]],
                sense: str, rhs: float) -> int:
        if name in self._rows:
            raise LpError(f"duplicate row name {name!r}")
        if sense not in _SENSES:
            raise LpError(f"row {name!r}: unknown sense {sense!r}")
        items = coefs.items() if isinstance(coefs, Mapping) else coefs
        row: dict[int, float] = {}
        for col, val in items:
            j = self.col(col)
            if j in row:
                raise LpError(f"row {name!r}: duplicate entry for column {col!r}")
            if val != 0.0:
                if not math.isfinite(val):
                    raise LpError(f"row {name!r}: non-finite coefficient on {col!r}")
                row[j] = float(val)
        self._rows[name] = len(self.row_names)
        self.row_names.append(name)
        self.sense.append(sense)
        self.rhs.append(float(rhs))
        self.rows.append(row)
        self._row_keys.add(_row_key(row, sense, rhs))
        return self._rows[name]

    def set_row(self, name: str, coefs: Mapping[str, float], rhs: float) -> None:
        """Replace the coefficients and right-hand side of an existing row."""
        i = self.row(name)
        self._row_keys.discard(_row_key(self.rows[i], self.sense[i], self.rhs[i]))
        self.rows[i] = {self.col(c): float(v) for c, v in coefs.items() if v != 0.0}
        self.rhs[i] = float(rhs)
        self._row_keys.add(_row_key(self.rows[i], self.sense[i], self.rhs[i]))

    def has_row_like(self, coefs: Mapping[str, float], sense: str, rhs: float) -> bool:
        row = {self.col(c): float(v) for c, v in coefs.items() if v != 0.0}
        return _row_key(row, sense, rhs) in self._row_keys

    def set_bounds(self, col: str, lower: float, upper: float) -> None:
        j = self.col(col)
        if lower > upper:
            raise LpError(f"column {col!r}: lower bound {lower} > upper bound {upper}")
        self.lower[j] = float(lower)
        self.upper[j] = float(upper)

    def set_cost(self, col: str, cost: float) -> None:
        self.cost[self.col(col)] = float(cost)

    def col(self, name: str) -> int:
        try:
            return self._cols[name]
        except KeyError:
            raise LpError(f"unknown column {name!r}") from None

    def row(self, name: str) -> int:
        try:
            return self._rows[name]
        except KeyError:
            raise LpError(f"unknown row {name!r}") from None

    def has_column(self, name: str) -> bool:
        return name in self._cols

    def has_row(self, name: str) -> bool:
        return name in self._rows

    @property
    def num_cols(self) -> int:
        return len(self.col_names)

    @property
    def num_rows(self) -> int:
        return len(self.row_names)

    @property
    def col_index(self) -> dict[str, int]:
        return self._cols

    @property
    def row_index(self) -> dict[str, int]:
        return self._rows

    def copy(self) -> "LinearProgram":
        other = LinearProgram(self.name)
        other.col_names = list(self.col_names)
        other.lower = list(self.lower)
        other.upper = list(self.upper)
        other.cost = list(self.cost)
        other.row_names = list(self.row_names)
        other.sense = list(self.sense)
        other.rhs = list(self.rhs)
        other.rows = [dict(r) for r in self.rows]
        other._cols = dict(self._cols)
        other._rows = dict(self._rows)
        other._row_keys = set(self._row_keys)
        return other

    # -- numeric views ----------------------------------------------------
    def dense_matrix(self) -> np.ndarray:
        A = np.zeros((self.num_rows, self.num_cols))
        for i, row in enumerate(self.rows):
            for j, v in row.items():
                A[i, j] = v
        return A

    def sparse_matrix(self):
        """Coefficient matrix as ``scipy.sparse.csc_matrix``."""
        import scipy.sparse as sp

        r, c, v = [], [], []
        for i, row in enumerate(self.rows):
            r.extend([i] * len(row))
            c.extend(row.keys())
            v.extend(row.values())
        return sp.csc_matrix((v, (r, c)), shape=(self.num_rows, self.num_cols))

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Row activity bounds implied by sense/rhs."""
        rhs = np.asarray(self.rhs, dtype=float)
        lo = np.full(self.num_rows, -np.inf)
        up = np.full(self.num_rows, np.inf)
        sense = np.asarray(self.sense, dtype=object)
        ge = sense == GE
        le = sense == LE
        eq = sense == EQ
        lo[ge | eq] = rhs[ge | eq]
        up[le | eq] = rhs[le | eq]
        return lo, up

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        return np.array([sum(v * x[j] for j, v in row.items()) for row in self.rows])

    def max_violation(self, x: np.ndarray) -> float:
        """Largest bound or row violation of ``x``, evaluated row by row."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        for j in range(self.num_cols):
            worst = max(worst, self.lower[j] - x[j], x[j] - self.upper[j])
        for row, s, b in zip(self.rows, self.sense, self.rhs):
            act = math.fsum(v * x[j] for j, v in row.items())
            if s in (LE, EQ):
                worst = max(worst, act - b)
            if s in (GE, EQ):
                worst = max(worst, b - act)
        return worst

    def objective_value(self, x: np.ndarray) -> float:
        return float(np.dot(self.cost, x))

    def __repr__(self) -> str:
        return f"LinearProgram({self.name!r}, rows={self.num_rows}, cols={self.num_cols})"


def _row_key(row: Mapping[int, float], sense: str, rhs: float) -> tuple:
    # 1e-12 granularity for duplicate detection
    items = tuple(sorted((j, round(v * 1e12)) for j, v in row.items()))
    return items, sense, round(float(rhs) * 1e12)

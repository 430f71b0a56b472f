"""LP container, embedded simplex solver and MPS export."""

from .lp import EQ, GE, LE, Basis, LinearProgram, LpError, LpSolution
from .mps import mangling_csv, write_mps
from .solve import BACKENDS, add_cut, dual_objective, solve

__all__ = [
    "EQ", "GE", "LE", "Basis", "LinearProgram", "LpError", "LpSolution",
    "write_mps", "mangling_csv", "solve", "add_cut", "dual_objective", "BACKENDS",
]

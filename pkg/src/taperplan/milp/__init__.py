"""Sparse MILP container, embedded simplex/branch-and-bound solver, oracle and MPS bridge."""

from .bnb import SolveOptions, solve_milp
from .model import LpResult, MilpBuilder, MilpSolution, SparseMilp
from .mps import (
    MpsError,
    MpsParseError,
    NameMap,
    read_external_solution,
    read_mps,
    read_name_map,
    solution_vector,
    write_mps,
    write_solution,
)
from .oracle import TooManyBinariesError, brute_force
from .simplex import ModelTooLargeError, SingularBasisError, solve_lp

__all__ = [
    "LpResult",
    "MilpBuilder",
    "MilpSolution",
    "ModelTooLargeError",
    "MpsError",
    "MpsParseError",
    "NameMap",
    "SingularBasisError",
    "SolveOptions",
    "SparseMilp",
    "TooManyBinariesError",
    "brute_force",
    "read_external_solution",
    "read_mps",
    "read_name_map",
    "solution_vector",
    "solve_lp",
    "solve_milp",
    "write_mps",
    "write_solution",
]

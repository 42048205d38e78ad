"""Solver-agnostic sparse MILP container and an incremental builder."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.sparse as sp

INF = np.inf


@dataclass(frozen=True)
class SparseMilp:
    """``min obj @ x + obj_offset`` s.t. ``row_lower <= A @ x <= row_upper``,
    ``col_lower <= x <= col_upper``, ``x[integrality]`` integer.

    Equalities have ``row_lower == row_upper``.
    """

    obj: np.ndarray
    col_lower: np.ndarray
    col_upper: np.ndarray
    integrality: np.ndarray
    A: sp.csr_matrix
    row_lower: np.ndarray
    row_upper: np.ndarray
    col_names: tuple[str, ...]
    row_names: tuple[str, ...]
    obj_offset: float = 0.0
    name: str = "model"

    def __post_init__(self):
        n = len(self.obj)
        m = len(self.row_lower)
        for arr in ("obj", "col_lower", "col_upper", "row_lower", "row_upper"):
            a = np.array(getattr(self, arr), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, arr, a)
        integ = np.array(self.integrality, dtype=bool)
        integ.setflags(write=False)
        object.__setattr__(self, "integrality", integ)
        A = sp.csr_matrix(self.A, dtype=float)
        A.sum_duplicates()
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "col_names", tuple(self.col_names))
        object.__setattr__(self, "row_names", tuple(self.row_names))

        if not (len(self.col_lower) == len(self.col_upper) == len(integ) == len(self.col_names) == n):
            raise ValueError("column arrays have inconsistent lengths")
        if not (len(self.row_upper) == len(self.row_names) == m):
            raise ValueError("row arrays have inconsistent lengths")
        if A.shape != (m, n):
            raise ValueError(f"A has shape {A.shape}, expected {(m, n)}")
        if np.any(~np.isfinite(self.col_lower[integ])) or np.any(~np.isfinite(self.col_upper[integ])):
            bad = [self.col_names[j] for j in np.flatnonzero(integ) if not np.isfinite(self.col_lower[j]) or not np.isfinite(self.col_upper[j])]
            raise ValueError(f"integral columns need finite bounds: {bad[:5]}")
        if len(set(self.col_names)) != n:
            raise ValueError("column names must be unique")
        if len(set(self.row_names)) != m:
            raise ValueError("row names must be unique")
        if not np.all(np.isfinite(A.data)) or not np.all(np.isfinite(self.obj)):
            raise ValueError("coefficients must be finite")

    @property
    def n_cols(self) -> int:
        return len(self.obj)

    @property
    def n_rows(self) -> int:
        return len(self.row_lower)

    @cached_property
    def dense_A(self) -> np.ndarray:
        a = self.A.toarray()
        a.setflags(write=False)
        return a

    @property
    def n_integral(self) -> int:
        return int(self.integrality.sum())

    def col_index(self, name: str) -> int:
        return self.col_names.index(name)

    def objective(self, x) -> float:
        return float(self.obj @ np.asarray(x, dtype=float) + self.obj_offset)

    def with_bounds(self, col_lower=None, col_upper=None) -> "SparseMilp":
        return replace(
            self,
            col_lower=self.col_lower if col_lower is None else col_lower,
            col_upper=self.col_upper if col_upper is None else col_upper,
        )

    def relaxed(self) -> "SparseMilp":
        return replace(self, integrality=np.zeros(self.n_cols, dtype=bool))

    def max_violation(self, x, integrality: bool = True) -> float:
        """Largest bound, row or integrality violation of ``x`` (absolute)."""
        x = np.asarray(x, dtype=float)
        act = self.A @ x
        viol = [
            np.max(self.col_lower - x, initial=0.0),
            np.max(x - self.col_upper, initial=0.0),
            np.max(self.row_lower - act, initial=0.0),
            np.max(act - self.row_upper, initial=0.0),
        ]
        if integrality and self.n_integral:
            xi = x[self.integrality]
            viol.append(np.max(np.abs(xi - np.round(xi)), initial=0.0))
        return float(max(viol))


@dataclass
class MilpBuilder:
    """Accumulates columns and rows, then freezes into a :class:`SparseMilp`."""

    name: str = "model"
    obj: list = field(default_factory=list)
    lo: list = field(default_factory=list)
    hi: list = field(default_factory=list)
    integ: list = field(default_factory=list)
    col_names: list = field(default_factory=list)
    rows_idx: list = field(default_factory=list)
    rows_val: list = field(default_factory=list)
    rlo: list = field(default_factory=list)
    rhi: list = field(default_factory=list)
    row_names: list = field(default_factory=list)
    obj_offset: float = 0.0

    def add_col(self, name, lb=0.0, ub=INF, cost=0.0, integer=False) -> int:
        self.col_names.append(name)
        self.lo.append(float(lb))
        self.hi.append(float(ub))
        self.obj.append(float(cost))
        self.integ.append(bool(integer))
        return len(self.col_names) - 1

    def add_binary(self, name, cost=0.0) -> int:
        return self.add_col(name, 0.0, 1.0, cost, integer=True)

    def add_row(self, name, cols, coefs, lb=-INF, ub=INF) -> int:
        cols = list(cols)
        coefs = [float(c) for c in coefs]
        if len(cols) != len(coefs):
            raise ValueError(f"row {name}: {len(cols)} columns but {len(coefs)} coefficients")
        self.rows_idx.append(cols)
        self.rows_val.append(coefs)
        self.rlo.append(float(lb))
        self.rhi.append(float(ub))
        self.row_names.append(name)
        return len(self.row_names) - 1

    def add_le(self, name, cols, coefs, rhs):
        return self.add_row(name, cols, coefs, -INF, rhs)

    def add_ge(self, name, cols, coefs, rhs):
        return self.add_row(name, cols, coefs, rhs, INF)

    def add_eq(self, name, cols, coefs, rhs):
        return self.add_row(name, cols, coefs, rhs, rhs)

    def drop_rows(self, keep) -> None:
        """Keep only rows whose name satisfies ``keep(name)``."""
        sel = [i for i, nm in enumerate(self.row_names) if keep(nm)]
        for attr in ("rows_idx", "rows_val", "rlo", "rhi", "row_names"):
            seq = getattr(self, attr)
            setattr(self, attr, [seq[i] for i in sel])

    @classmethod
    def from_milp(cls, m: SparseMilp) -> "MilpBuilder":
        b = cls(name=m.name, obj_offset=m.obj_offset)
        b.obj = list(m.obj)
        b.lo = list(m.col_lower)
        b.hi = list(m.col_upper)
        b.integ = list(m.integrality)
        b.col_names = list(m.col_names)
        A = m.A
        for i in range(m.n_rows):
            s, e = A.indptr[i], A.indptr[i + 1]
            b.rows_idx.append(list(A.indices[s:e]))
            b.rows_val.append(list(A.data[s:e]))
        b.rlo = list(m.row_lower)
        b.rhi = list(m.row_upper)
        b.row_names = list(m.row_names)
        return b

    def build(self) -> SparseMilp:
        n = len(self.col_names)
        m = len(self.row_names)
        indptr = np.zeros(m + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(r) for r in self.rows_idx])
        indices = np.fromiter((j for r in self.rows_idx for j in r), dtype=np.int64, count=indptr[-1])
        data = np.fromiter((v for r in self.rows_val for v in r), dtype=float, count=indptr[-1])
        if indices.size and (indices.min() < 0 or indices.max() >= n):
            raise ValueError("row references a column index out of range")
        A = sp.csr_matrix((data, indices, indptr), shape=(m, n))
        return SparseMilp(
            obj=np.array(self.obj, dtype=float),
            col_lower=np.array(self.lo, dtype=float),
            col_upper=np.array(self.hi, dtype=float),
            integrality=np.array(self.integ, dtype=bool),
            A=A,
            row_lower=np.array(self.rlo, dtype=float),
            row_upper=np.array(self.rhi, dtype=float),
            col_names=tuple(self.col_names),
            row_names=tuple(self.row_names),
            obj_offset=self.obj_offset,
            name=self.name,
        )


@dataclass(frozen=True)
class LpResult:
    status: str  # optimal | infeasible | unbounded | iteration_limit
    x: np.ndarray | None
    objective: float
    duals: np.ndarray | None = None
    iterations: int = 0


@dataclass(frozen=True)
class MilpSolution:
    """Outcome of a MILP solve.

    ``status`` is one of ``optimal``, ``feasible`` (limit hit with an
    incumbent; see ``gap``), ``infeasible``, ``unbounded`` or ``limit``
    (limit hit without any incumbent).
    """

    status: str
    x: np.ndarray | None
    objective: float
    bound: float
    gap: float
    nodes: int = 0
    wall_time: float = 0.0
    lp_iterations: int = 0

    @property
    def has_solution(self) -> bool:
        return self.x is not None and self.status in ("optimal", "feasible")

    @property
    def status_label(self) -> str:
        if self.status == "feasible":
            return f"feasible({self.gap:.6g})"
        return self.status

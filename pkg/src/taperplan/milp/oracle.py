"""Exhaustive enumeration of binary assignments, used as a reference solver."""

from __future__ import annotations

import time

import numpy as np

from .model import MilpSolution, SparseMilp
from .simplex import solve_lp

HARD_CAP = 20


class TooManyBinariesError(ValueError):
    pass


def _pure_integral_rows(milp: SparseMilp):
    """Rows touching only integral columns, as ``(cols, coefs, lo, hi)`` tuples."""
    A = milp.A
    out = []
    for i in range(milp.n_rows):
        s, e = A.indptr[i], A.indptr[i + 1]
        cols = A.indices[s:e]
        if cols.size and milp.integrality[cols].all():
            out.append((cols, A.data[s:e], milp.row_lower[i], milp.row_upper[i]))
    return out


def brute_force(milp: SparseMilp, max_binaries: int = HARD_CAP) -> MilpSolution:
    """Solve ``milp`` by trying every 0/1 assignment of its free binaries.

    Each assignment fixes the integral columns and solves the continuous LP
    that remains. Rows made only of integral columns are checked with
    activity bounds while the assignment is being built, so subtrees they
    already rule out are skipped without an LP; the result is the same as
    solving all ``2**k`` LPs.

    Raises
    ------
    TooManyBinariesError
        If more than ``max_binaries`` integral columns are unfixed.
    ValueError
        If an integral column is not binary, or ``max_binaries`` exceeds 20.
    """
    if max_binaries > HARD_CAP:
        raise ValueError(f"max_binaries may not exceed {HARD_CAP}")
    t0 = time.perf_counter()
    lo = np.array(milp.col_lower, dtype=float)
    hi = np.array(milp.col_upper, dtype=float)
    int_idx = np.flatnonzero(milp.integrality)
    if np.any(lo[int_idx] < 0) or np.any(hi[int_idx] > 1):
        raise ValueError("brute_force handles binary integral columns only")
    lo[int_idx] = np.ceil(lo[int_idx] - 1e-9)
    hi[int_idx] = np.floor(hi[int_idx] + 1e-9)
    free = int_idx[lo[int_idx] < hi[int_idx]]
    if free.size > max_binaries:
        raise TooManyBinariesError(
            f"{free.size} unfixed binaries exceed the enumeration limit of {max_binaries}"
        )

    rows = _pure_integral_rows(milp)
    pos = np.full(milp.n_cols, -1)
    pos[free] = np.arange(free.size)

    best_x = None
    best_obj = np.inf
    status = "infeasible"
    lps = 0
    val = lo.copy()

    def rows_ok(depth):
        # activity range of each pure-integral row with positions >= depth still open
        for cols, coefs, rlo, rhi in rows:
            p = pos[cols]
            open_ = p >= depth
            fixed_part = float(coefs[~open_] @ val[cols[~open_]])
            c = coefs[open_]
            amin = fixed_part + c[c < 0].sum()
            amax = fixed_part + c[c > 0].sum()
            if amax < rlo - 1e-9 or amin > rhi + 1e-9:
                return False
        return True

    def visit(depth):
        nonlocal best_x, best_obj, status, lps
        if not rows_ok(depth):
            return
        if depth == free.size:
            r = solve_lp(milp, val, np.where(milp.integrality, val, hi))
            lps += 1
            if r.status == "unbounded":
                status = "unbounded"
            elif r.status == "optimal" and r.objective < best_obj:
                best_obj = r.objective
                best_x = r.x
            return
        j = free[depth]
        for v in (0.0, 1.0):
            val[j] = v
            visit(depth + 1)
        val[j] = lo[j]

    visit(0)
    wall = time.perf_counter() - t0
    if status == "unbounded":
        return MilpSolution("unbounded", None, -np.inf, -np.inf, np.inf, lps, wall)
    if best_x is None:
        return MilpSolution("infeasible", None, np.nan, np.inf, np.inf, lps, wall)
    return MilpSolution("optimal", best_x, best_obj, best_obj, 0.0, lps, wall)

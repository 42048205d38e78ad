"""LP relaxation solver: presolve, scaling and reinversion around the pivot kernels."""

from __future__ import annotations

import numpy as np

from .._accel import pick
from . import kernels as K
from .model import LpResult, SparseMilp

FEAS_TOL = 1e-7
PRIMAL_TOL = 1e-9
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
BLAND_AFTER = 50
MAX_DENSE_ENTRIES = 40_000_000


class SingularBasisError(RuntimeError):
    """Raised when the basis matrix cannot be reinverted."""


class ModelTooLargeError(MemoryError):
    pass


def _presolve(milp: SparseMilp, lower, upper):
    """Drop fixed columns and empty rows. Returns None when trivially infeasible."""
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if np.any(lo > hi + FEAS_TOL):
        return None
    fixed = np.isfinite(lo) & np.isfinite(hi) & (hi - lo <= 1e-12)
    xfix = np.where(fixed, lo, 0.0)
    keep_cols = np.flatnonzero(~fixed)
    A = milp.dense_A
    shift = A @ xfix
    rl = milp.row_lower - shift
    ru = milp.row_upper - shift
    Ak = A[:, keep_cols]
    empty = ~np.any(Ak != 0.0, axis=1)
    if np.any(rl[empty] > FEAS_TOL) or np.any(ru[empty] < -FEAS_TOL):
        return None
    keep_rows = np.flatnonzero(~empty)
    if np.any(rl[keep_rows] > ru[keep_rows] + FEAS_TOL):
        return None
    return dict(
        keep_cols=keep_cols,
        keep_rows=keep_rows,
        xfix=xfix,
        A=Ak[keep_rows],
        rl=rl[keep_rows],
        ru=ru[keep_rows],
        c=milp.obj[keep_cols],
        lo=lo[keep_cols],
        hi=hi[keep_cols],
    )


def _initial_point(lo, hi):
    n = lo.shape[0]
    status = np.full(n, K.AT_LOWER, dtype=np.int64)
    x = np.where(np.isfinite(lo), lo, 0.0)
    up = ~np.isfinite(lo) & np.isfinite(hi)
    x[up] = hi[up]
    status[up] = K.AT_UPPER
    free = ~np.isfinite(lo) & ~np.isfinite(hi)
    status[free] = K.FREE
    return x, status


def _basic_values(Afull, basis, x, status):
    B = Afull[:, basis]
    nonbasic = status != K.BASIC
    rhs = -(Afull[:, nonbasic] @ x[nonbasic])
    try:
        return np.linalg.solve(B, rhs)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(B)
        raise SingularBasisError(
            f"basis of size {B.shape[0]} is singular (cond={cond:.3g}); basic columns {basis.tolist()[:20]}"
        ) from exc


def _reinvert(Afull, basis, nonbasic, x, status):
    xb = _basic_values(Afull, basis, x, status)
    return np.linalg.solve(Afull[:, basis], Afull[:, nonbasic]), xb


def solve_lp(
    milp: SparseMilp,
    lower=None,
    upper=None,
    max_iter: int | None = None,
    backend: str | None = None,
) -> LpResult:
    """Solve the continuous relaxation of ``milp`` (integrality ignored).

    ``lower``/``upper`` override the column bounds, which is how branch and
    bound and the enumeration oracle pose their subproblems without copying
    the model.
    """
    lower = milp.col_lower if lower is None else lower
    upper = milp.col_upper if upper is None else upper
    ps = _presolve(milp, lower, upper)
    if ps is None:
        return LpResult("infeasible", None, np.inf)
    A = ps["A"]
    m, n = A.shape
    N = n + m
    if m * N > MAX_DENSE_ENTRIES:
        raise ModelTooLargeError(
            f"dense model would hold {m}x{N} entries; export the model and use an external solver"
        )

    # row equilibration and objective scaling
    rmax = np.max(np.abs(A), axis=1) if m else np.zeros(0)
    rscale = 1.0 / rmax
    c = ps["c"]
    cmax = float(np.max(np.abs(c), initial=0.0))
    cscale = 1.0 / cmax if cmax > 0 else 1.0

    As = A * rscale[:, None]
    Afull = np.hstack([As, -np.eye(m)])
    rl = ps["rl"] * rscale
    ru = ps["ru"] * rscale
    lo = np.concatenate([ps["lo"], rl])
    hi = np.concatenate([ps["hi"], ru])
    cost = np.concatenate([c * cscale, np.zeros(m)])

    xs, st = _initial_point(ps["lo"], ps["hi"])
    x = np.concatenate([xs, As @ xs])
    status = np.concatenate([st, np.full(m, K.BASIC, dtype=np.int64)])
    basis = np.arange(n, N, dtype=np.int64)
    nonbasic = np.arange(n, dtype=np.int64)
    T = -As  # B^-1 N with B = -I at the slack basis

    kernel = pick(K.simplex_nb, K.simplex_np, backend)
    budget = max(200, m)
    max_iter = max_iter if max_iter is not None else 50 * (N + 10)
    total = 0
    code = K.OPTIMAL
    while True:
        code, piv = kernel(
            T, cost, lo, hi, x, basis, nonbasic, status,
            min(budget, max_iter - total), PRIMAL_TOL, DUAL_TOL, PIVOT_TOL, BLAND_AFTER,
        )
        total += piv
        if code == K.PIVOT_BUDGET:
            if total >= max_iter:
                return LpResult("iteration_limit", None, np.nan, iterations=total)
            T, x[basis] = _reinvert(Afull, basis, nonbasic, x, status)
            continue
        if code == K.OPTIMAL and m and piv:
            xb = _basic_values(Afull, basis, x, status)
            drift = np.max(np.abs(xb - x[basis]), initial=0.0)
            x[basis] = xb
            if drift > PRIMAL_TOL:
                # cleaned-up basic values may have left their bounds; resume
                if total >= max_iter:
                    return LpResult("iteration_limit", None, np.nan, iterations=total)
                T = np.linalg.solve(Afull[:, basis], Afull[:, nonbasic])
                continue
        break

    if code == K.INFEASIBLE:
        return LpResult("infeasible", None, np.inf, iterations=total)
    if code == K.UNBOUNDED:
        return LpResult("unbounded", None, -np.inf, iterations=total)
    if code == K.NUMERICAL:
        raise SingularBasisError("phase 1 found an unbounded ray; the model is numerically ill-posed")

    full = ps["xfix"].copy()
    xk = x[:n]
    # snap to bounds that were hit within tolerance
    xk = np.where(np.abs(xk - ps["lo"]) <= PRIMAL_TOL, ps["lo"], xk)
    xk = np.where(np.abs(xk - ps["hi"]) <= PRIMAL_TOL, ps["hi"], xk)
    full[ps["keep_cols"]] = xk

    duals = np.zeros(milp.n_rows)
    if m:
        cb = cost[basis]
        try:
            y = np.linalg.solve(Afull[:, basis].T, cb)
        except np.linalg.LinAlgError:
            y = np.zeros(m)
        duals[ps["keep_rows"]] = y * rscale / cscale
    return LpResult("optimal", full, milp.objective(full), duals, total)

"""File-based hand-off to an external MILP solver.

The model goes out as ``<stem>.mps`` plus the ``<stem>.mps.names`` sidecar;
the solver's answer comes back as a ``name value`` per line file. Nothing
here links a solver into the process except :func:`run_highs`, a convenience
runner that drives the optional ``highspy`` package over those same files.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import SparseMilp
from .mps import NameMap, read_external_solution, read_name_map, solution_vector, write_mps


@dataclass(frozen=True)
class BridgeFiles:
    mps: Path
    names: Path
    solution: Path

    @classmethod
    def in_dir(cls, directory, stem: str = "model") -> "BridgeFiles":
        d = Path(directory)
        return cls(d / f"{stem}.mps", d / f"{stem}.mps.names", d / f"{stem}.sol")


@dataclass(frozen=True)
class ExternalResult:
    status: str
    objective: float
    bound: float
    gap: float


def export_model(milp: SparseMilp, files: BridgeFiles) -> NameMap:
    _, names = write_mps(milp, files.mps, files.names)
    return names


def import_solution(milp: SparseMilp, files: BridgeFiles) -> np.ndarray:
    """Column vector read back from ``files.solution`` (absent columns are 0)."""
    names = read_name_map(files.names)
    return solution_vector(read_external_solution(files.solution, names), milp)


def run_highs(
    files: BridgeFiles,
    time_limit_s: float = 3600.0,
    gap_tol: float = 0.0,
    milp: SparseMilp | None = None,
    heuristic=None,
) -> ExternalResult:
    """Solve ``files.mps`` with HiGHS and write ``files.solution``.

    With ``heuristic`` (same signature as ``SolveOptions.heuristic``; needs
    the in-memory ``milp`` the file was written from) the LP relaxation is
    solved first, each candidate the heuristic proposes from it gets its
    integral columns fixed and its continuous part re-solved, and the best
    result is handed to HiGHS as the starting incumbent. The warm start
    counts against ``time_limit_s``.

    Raises ImportError when ``highspy`` is not installed.
    """
    import highspy

    if heuristic is not None and milp is None:
        raise ValueError("a heuristic warm start needs the model it runs on")
    t0 = time.perf_counter()
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    h.readModel(str(files.mps))
    if heuristic is not None:
        x0 = _warm_start(h, milp, heuristic)
        if x0 is not None:
            start = highspy.HighsSolution()
            start.col_value = list(x0)
            start.value_valid = True
            h.setSolution(start)
    h.setOptionValue("time_limit", max(float(time_limit_s) - (time.perf_counter() - t0), 1e-3))
    h.setOptionValue("mip_rel_gap", float(gap_tol))
    h.run()
    st = h.getModelStatus()
    info = h.getInfo()
    S = highspy.HighsModelStatus
    if st == S.kOptimal:
        status = "optimal"
    elif st in (S.kInfeasible,):
        status = "infeasible"
    elif st in (S.kUnbounded, S.kUnboundedOrInfeasible):
        status = "unbounded"
    elif info.primal_solution_status == 2:
        status = "feasible"
    else:
        status = "limit"
    if status in ("optimal", "feasible"):
        x = h.getSolution().col_value
        lines = [f"{h.getColName(j)[1]} {float(v)!r}" for j, v in enumerate(x)]
        tmp = files.solution.with_name(files.solution.name + ".tmp")
        tmp.write_text("\n".join(lines) + "\n")
        tmp.replace(files.solution)
    return ExternalResult(
        status=status,
        objective=float(info.objective_function_value) if status in ("optimal", "feasible") else np.nan,
        bound=float(info.mip_dual_bound),
        gap=float(info.mip_gap) if status == "feasible" else 0.0,
    )


def _warm_start(h, milp: SparseMilp, heuristic) -> np.ndarray | None:
    """Best polished heuristic candidate, or None; leaves ``h`` as loaded."""
    import highspy

    integ = np.flatnonzero(milp.integrality).astype(np.int32)
    k = len(integ)
    ok = highspy.HighsModelStatus.kOptimal
    h.changeColsIntegrality(k, integ, np.zeros(k, dtype=np.uint8))
    h.run()
    relaxed = np.array(h.getSolution().col_value) if h.getModelStatus() == ok else None
    h.changeColsIntegrality(k, integ, np.ones(k, dtype=np.uint8))
    if relaxed is None or k == 0:
        h.clearSolver()
        return None
    lo, hi = milp.col_lower[integ], milp.col_upper[integ]
    best, best_obj = None, np.inf
    for cand in np.atleast_2d(heuristic(milp, relaxed)):
        z = np.clip(np.round(cand[integ]), lo, hi)
        h.changeColsBounds(k, integ, z, z)
        h.run()
        if h.getModelStatus() == ok and h.getInfo().objective_function_value < best_obj:
            best_obj = h.getInfo().objective_function_value
            best = np.array(h.getSolution().col_value)
    h.changeColsBounds(k, integ, lo, hi)
    h.clearSolver()
    return best

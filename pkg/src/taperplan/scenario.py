"""Synthetic daily profile, the four sizing case studies and their summary table.

Cases (tapering / sizing):

1. tapered charging, sizes optimised;
2. no tapering, sizes optimised;
3. no tapering, sizes fixed to the Case 1 optimum;
4. tapered charging, sizes fixed to the Case 2 optimum.

The battery starts every day at half charge. Energy totals are weighted like
the objective: each modelled hour counts ``alpha`` times.
"""

from __future__ import annotations

import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .domain import ConfigError, PlanningConfig, Profiles, TaperSchedule, pv_efficiency, validate_config
from .io import write_rows
from .milp import SolveOptions, bridge, solve_milp
from .planmodel import (
    PlanSolution,
    Residual,
    build_model,
    check_solution,
    extract_solution,
    fix_sizes,
    planning_heuristic,
)

SOLVERS = ("embedded", "highs")
INIT_SOC = 0.5


class PlanFailure(RuntimeError):
    """No plan to report: the model is infeasible or no incumbent was found."""

    def __init__(self, status: str, message: str):
        self.status = status
        super().__init__(message)


class DependencyError(RuntimeError):
    pass


class AuditError(RuntimeError):
    """A solver returned a plan that breaks the original model statements."""

    def __init__(self, message: str, residuals: list[Residual]):
        self.residuals = residuals
        super().__init__(f"{message}: {len(residuals)} violations, first: {residuals[0]}")


def synthetic_profile(T: int = 24, years: int = 1) -> Profiles:
    """The representative day: 0.5 MW base load with a 1.5 MW evening peak.

    PV is zero through hour 6, climbs in equal steps over hours 7-10 to reach
    1 p.u. at hour 11, holds 1 p.u. through hour 14, falls in equal steps over
    hours 15-16 and is zero from hour 17. Load sums to 18 MWh per day.
    """
    if T != 24:
        raise ValueError(f"the synthetic profile is defined for T=24 hours, got {T}")
    h = np.arange(1, 25)
    load = np.where((h >= 17) & (h <= 22), 1.5, 0.5)
    pv = np.zeros(24)
    pv[6:10] = (h[6:10] - 6) / 5.0
    pv[10:14] = 1.0
    pv[14] = 2.0 / 3.0
    pv[15] = 1.0 / 3.0
    return Profiles.from_days(load, pv, years=years)


# ---------------------------------------------------------------- solving


def solve_plan(
    cfg: PlanningConfig,
    prof: Profiles,
    sched: TaperSchedule | None,
    options: SolveOptions | None = None,
    fix_pv: float | None = None,
    fix_bess: float | None = None,
    solver: str = "embedded",
    workdir=None,
) -> PlanSolution:
    """Build, solve and audit one planning instance.

    ``sched=None`` disables tapering. With ``solver="highs"`` the model makes
    the round trip through MPS and solution files in ``workdir`` (a temporary
    directory when omitted), and HiGHS starts from the best polished
    dispatch heuristic candidate. Every returned plan has passed
    :func:`check_solution` at 1e-6.

    Raises
    ------
    PlanFailure
        Infeasible model, or a limit reached before any incumbent.
    AuditError
        The solver's plan violates the model.
    """
    if solver not in SOLVERS:
        raise ValueError(f"solver must be one of {SOLVERS}")
    problems = validate_config(cfg, sched)
    if problems:
        raise ConfigError("invalid planning configuration", problems)
    options = options or SolveOptions()
    milp, cat = build_model(cfg, prof, sched, hull_cuts=sched is not None)
    if fix_pv is not None or fix_bess is not None:
        milp = fix_sizes(milp, cat, fix_pv, fix_bess)

    t0 = time.perf_counter()
    if solver == "embedded":
        if options.heuristic is None:
            options = SolveOptions(
                gap_tol=options.gap_tol,
                time_limit_s=options.time_limit_s,
                node_limit=options.node_limit,
                dive_threshold=options.dive_threshold,
                heuristic=planning_heuristic(cat, cfg, prof, sched),
                heuristic_every=options.heuristic_every,
                backend=options.backend,
            )
        res = solve_milp(milp, options)
        status, x, bound, gap, nodes = res.status, res.x, res.bound, res.gap, res.nodes
    else:
        with tempfile.TemporaryDirectory() as tmp:
            files = bridge.BridgeFiles.in_dir(workdir or tmp)
            bridge.export_model(milp, files)
            heur = options.heuristic or planning_heuristic(cat, cfg, prof, sched)
            ext = bridge.run_highs(files, options.time_limit_s, options.gap_tol, milp=milp, heuristic=heur)
            x = bridge.import_solution(milp, files) if ext.status in ("optimal", "feasible") else None
        status, bound, gap, nodes = ext.status, ext.bound, ext.gap, None
    wall = time.perf_counter() - t0

    if x is None:
        if status == "unbounded":
            raise PlanFailure(status, "planning model is unbounded")
        raise PlanFailure(status, f"no feasible plan ({status})")
    sol = extract_solution(x, cat, milp.objective(x), status=status, gap=gap, bound=bound)
    sol.extra.update(wall_time=wall, nodes=nodes, solver=solver, n_rows=milp.n_rows, n_cols=milp.n_cols)
    bad = check_solution(cfg, prof, sched, sol, tol=1e-6)
    if bad:
        raise AuditError(f"{solver} solver returned an invalid plan", bad)
    return sol


# ------------------------------------------------------------------ cases


@dataclass(frozen=True)
class CaseSpec:
    case_id: int
    tapering: bool
    fixed_from: int | None = None

    @property
    def label(self) -> str:
        return f"Case {self.case_id}"


TABLE_II = (
    CaseSpec(1, True, None),
    CaseSpec(2, False, None),
    CaseSpec(3, False, 1),
    CaseSpec(4, True, 2),
)


@dataclass(frozen=True)
class CaseResult:
    """Objective, sizes and alpha-weighted energy totals (MWh) of one case."""

    case_id: int
    tapering: bool
    fixed_from: int | None
    objective: float
    s_pv: float
    s_bess: float
    total_load: float
    pv_generation: float
    pv_curtailed: float
    bess_charging: float
    bess_discharging: float
    load_shed: float
    status: str
    solution: PlanSolution = field(repr=False, compare=False)

    @property
    def sizes_fixed(self) -> bool:
        return self.fixed_from is not None


def case_config(cfg: PlanningConfig) -> PlanningConfig:
    """``cfg`` with the daily initial SOC pinned at one half."""
    return cfg.with_(init_soc_mode="fixed_fraction", init_soc_fraction=INIT_SOC)


def energy_totals(cfg: PlanningConfig, prof: Profiles, sol: PlanSolution) -> dict[str, float]:
    """Horizon totals in MWh, every modelled hour weighted by ``alpha``."""
    eta = np.array([pv_efficiency(cfg, y + 1) for y in range(prof.years)])
    avail = eta[:, None, None] * prof.pv_cf * sol.s_pv
    w = cfg.alpha
    return dict(
        total_load=w * float(prof.load.sum()),
        pv_generation=w * float(avail.sum()),
        pv_curtailed=w * float(sol.p_curt.sum()),
        bess_charging=w * float(sol.p_chg.sum()),
        bess_discharging=w * float(sol.p_dchg.sum()),
        load_shed=w * float(sol.p_ls.sum()),
    )


def run_case(
    spec: CaseSpec,
    cfg: PlanningConfig,
    prof: Profiles,
    sched: TaperSchedule,
    prior: dict[int, CaseResult] | None = None,
    options: SolveOptions | None = None,
    solver: str = "embedded",
) -> CaseResult:
    """Solve one case. Fixed-size cases need their source case in ``prior``."""
    prior = prior or {}
    fix_pv = fix_bess = None
    if spec.fixed_from is not None:
        src = prior.get(spec.fixed_from)
        if src is None:
            raise DependencyError(f"{spec.label} needs Case {spec.fixed_from}, which has not been solved")
        fix_pv, fix_bess = src.s_pv, src.s_bess
    ccfg = case_config(cfg)
    sol = solve_plan(
        ccfg, prof, sched if spec.tapering else None, options, fix_pv=fix_pv, fix_bess=fix_bess, solver=solver
    )
    return CaseResult(
        case_id=spec.case_id,
        tapering=spec.tapering,
        fixed_from=spec.fixed_from,
        objective=sol.objective,
        s_pv=sol.s_pv,
        s_bess=sol.s_bess,
        status=sol.status_label,
        solution=sol,
        **energy_totals(ccfg, prof, sol),
    )


def run_cases(
    cfg: PlanningConfig,
    prof: Profiles,
    sched: TaperSchedule,
    options: SolveOptions | None = None,
    solver: str = "embedded",
    cases=TABLE_II,
    on_result=None,
) -> list[CaseResult]:
    """Run ``cases`` in order; a case whose source case failed raises DependencyError."""
    done: dict[int, CaseResult] = {}
    out = []
    for spec in cases:
        try:
            res = run_case(spec, cfg, prof, sched, done, options, solver)
        except (PlanFailure, AuditError) as exc:
            dependants = [c.label for c in cases if c.fixed_from == spec.case_id]
            if dependants:
                raise DependencyError(f"{spec.label} failed ({exc}); cannot run {', '.join(dependants)}") from exc
            raise
        done[spec.case_id] = res
        out.append(res)
        if on_result is not None:
            on_result(res)
    return out


# ----------------------------------------------------------------- report

REPORT_ROWS = (
    ("Objective cost ($)", "objective"),
    ("PV size (MW)", "s_pv"),
    ("BESS size (MWh)", "s_bess"),
    ("Total load (MWh)", "total_load"),
    ("PV generation (MWh)", "pv_generation"),
    ("PV curtailed (MWh)", "pv_curtailed"),
    ("BESS charging (MWh)", "bess_charging"),
    ("BESS discharging (MWh)", "bess_discharging"),
    ("Load shedding (MWh)", "load_shed"),
)
SIZE_ATTRS = ("s_pv", "s_bess")


def report_rows(results: list[CaseResult]) -> list[list[str]]:
    """Table of metrics by case; sizes inherited from another case carry a marker."""
    if not results:
        raise ValueError("report needs at least one case result")
    rows = [["metric"] + [f"Case {r.case_id}" for r in results]]
    for label, attr in REPORT_ROWS:
        row = [label]
        for r in results:
            cell = repr(float(getattr(r, attr)))
            if attr in SIZE_ATTRS and r.sizes_fixed:
                cell += f" (fixed from Case {r.fixed_from})"
            row.append(cell)
        rows.append(row)
    return rows


def write_report(path, results: list[CaseResult]) -> Path:
    write_rows(path, report_rows(results))
    return Path(path)

"""PV/BESS sizing model, its SOC-band tapering extension, and a solution checker.

The tapering rules are kept linear: band thresholds are applied to stored
energy rather than to SOC (``E >= tau * S_bess`` with a constant big-M) and
the product of a band binary with the installed size is carried by an
auxiliary column bounded by the four binary-product inequalities. SOC itself
is only computed afterwards, when a solution is extracted or checked.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .domain import (
    ConfigError,
    PlanningConfig,
    Profiles,
    TaperSchedule,
    pv_efficiency,
    validate_config,
    validate_profiles,
    validate_schedule,
)
from .milp import MilpBuilder, SparseMilp

INF = np.inf


@dataclass(frozen=True)
class VariableCatalog:
    """Column indices of every model variable.

    Per-step arrays are shaped ``(Y, D, T)``; band arrays ``(B, Y, D, T)``.
    """

    shape: tuple[int, int, int]
    s_pv: int
    s_bess: int
    e_init: int
    c_pv_deg: int
    p_chg: np.ndarray
    p_dchg: np.ndarray
    p_ls: np.ndarray
    p_curt: np.ndarray
    e_bess: np.ndarray
    u_chg: np.ndarray
    u_dchg: np.ndarray
    u_band: np.ndarray | None = None
    w_band: np.ndarray | None = None

    @property
    def n_bands(self) -> int:
        return 0 if self.u_band is None else self.u_band.shape[0]

    def all_indices(self) -> np.ndarray:
        parts = [np.array([self.s_pv, self.s_bess, self.e_init, self.c_pv_deg])]
        for arr in (self.p_chg, self.p_dchg, self.p_ls, self.p_curt, self.e_bess, self.u_chg, self.u_dchg,
                    self.u_band, self.w_band):
            if arr is not None:
                parts.append(arr.ravel())
        return np.concatenate(parts)


def _tag(y, d, t):
    return f"[{y + 1},{d + 1},{t + 1}]"


def _check_inputs(cfg: PlanningConfig, prof: Profiles):
    problems = validate_config(cfg) + validate_profiles(prof)
    if problems:
        raise ConfigError("invalid planning inputs", problems)


def build_baseline(
    cfg: PlanningConfig,
    prof: Profiles,
    fix_dark_charging: bool = True,
) -> tuple[SparseMilp, VariableCatalog]:
    """Sizing and dispatch model without tapering.

    Parameters
    ----------
    fix_dark_charging
        Pin charging to zero (flow and binary) in steps with no PV
        availability. Nothing else can supply charging power there: shedding
        is capped by the load and discharging excludes charging. Optimal
        values are unchanged; the branching space shrinks.

    Returns
    -------
    (SparseMilp, VariableCatalog)
    """
    _check_inputs(cfg, prof)
    Y, D, T = prof.shape
    b = MilpBuilder(name="plan")
    s_pv = b.add_col("S_pv", 0.0, cfg.s_pv_max, cfg.c_pv_capital)
    s_bess = b.add_col("S_bess", 0.0, cfg.s_bess_max, cfg.c_bess_capital)
    e_init = b.add_col("E_init", 0.0, INF)
    c_deg = b.add_col("C_pv_deg", -INF, INF, float(cfg.y_mg))

    shape = (Y, D, T)
    idx = {k: np.empty(shape, dtype=np.int64) for k in ("p_chg", "p_dchg", "p_ls", "p_curt", "e", "u_c", "u_d")}
    shed_cost = cfg.alpha * cfg.c_ls_penalty
    for y in range(Y):
        eta_y = pv_efficiency(cfg, y + 1)
        for d in range(D):
            for t in range(T):
                tag = _tag(y, d, t)
                avail = eta_y * prof.pv_cf[y, d, t]
                dark = fix_dark_charging and avail == 0.0
                idx["p_chg"][y, d, t] = b.add_col(f"P_chg{tag}", 0.0, 0.0 if dark else INF)
                idx["p_dchg"][y, d, t] = b.add_col(f"P_dchg{tag}", 0.0, INF)
                idx["p_ls"][y, d, t] = b.add_col(f"P_ls{tag}", 0.0, prof.load[y, d, t], shed_cost)
                idx["p_curt"][y, d, t] = b.add_col(f"P_curt{tag}", 0.0, 0.0 if avail == 0.0 else INF)
                idx["e"][y, d, t] = b.add_col(f"E{tag}", 0.0, INF)
                uc = b.add_binary(f"U_chg{tag}")
                if dark:
                    b.hi[uc] = 0.0
                idx["u_c"][y, d, t] = uc
                idx["u_d"][y, d, t] = b.add_binary(f"U_dchg{tag}")

    b.add_eq("pv_deg_cost", [c_deg, s_pv], [1.0, -cfg.gamma_pv_rep * cfg.c_pv_capital * cfg.delta_pv_deg], 0.0)
    b.add_ge("init_soc_min", [e_init, s_bess], [1.0, -cfg.soc_min], 0.0)
    b.add_le("init_soc_max", [e_init, s_bess], [1.0, -cfg.soc_max], 0.0)
    f = cfg.fixed_init_soc
    if f is not None:
        b.add_eq("init_soc_fixed", [e_init, s_bess], [1.0, -f], 0.0)

    for y in range(Y):
        eta_y = pv_efficiency(cfg, y + 1)
        for d in range(D):
            prev = e_init
            for t in range(T):
                tag = _tag(y, d, t)
                pc, pd, ls, cu, e, uc, ud = (idx[k][y, d, t] for k in ("p_chg", "p_dchg", "p_ls", "p_curt", "e", "u_c", "u_d"))
                avail = eta_y * prof.pv_cf[y, d, t]
                b.add_eq(f"balance{tag}", [pd, s_pv, ls, pc, cu], [1.0, avail, 1.0, -1.0, -1.0], prof.load[y, d, t])
                b.add_le(f"curtail{tag}", [cu, s_pv], [1.0, -avail], 0.0)
                b.add_ge(f"soc_min{tag}", [e, s_bess], [1.0, -cfg.soc_min], 0.0)
                b.add_le(f"soc_max{tag}", [e, s_bess], [1.0, -cfg.soc_max], 0.0)
                if not (fix_dark_charging and avail == 0.0):
                    # with charging pinned off these three rows are vacuous
                    b.add_le(f"exclusive{tag}", [uc, ud], [1.0, 1.0], 1.0)
                    b.add_le(f"chg_cap{tag}", [pc, s_bess], [1.0, -1.0 / cfg.t_chg], 0.0)
                    b.add_le(f"chg_on{tag}", [pc, uc], [1.0, -cfg.m_bess], 0.0)
                b.add_le(f"dchg_cap{tag}", [pd, s_bess], [1.0, -1.0 / cfg.t_dchg], 0.0)
                b.add_le(f"dchg_on{tag}", [pd, ud], [1.0, -cfg.m_bess], 0.0)
                b.add_eq(f"energy{tag}", [e, prev, pc, pd], [1.0, -1.0, -cfg.eta_chg, 1.0 / cfg.eta_dchg], 0.0)
                prev = e
            if cfg.terminal_soc_constraint:
                b.add_ge(f"terminal[{y + 1},{d + 1}]", [prev, e_init], [1.0, -1.0], 0.0)

    cat = VariableCatalog(
        shape=shape,
        s_pv=s_pv,
        s_bess=s_bess,
        e_init=e_init,
        c_pv_deg=c_deg,
        p_chg=idx["p_chg"],
        p_dchg=idx["p_dchg"],
        p_ls=idx["p_ls"],
        p_curt=idx["p_curt"],
        e_bess=idx["e"],
        u_chg=idx["u_c"],
        u_dchg=idx["u_d"],
    )
    return b.build(), cat


def add_tapering(
    milp: SparseMilp,
    cat: VariableCatalog,
    cfg: PlanningConfig,
    sched: TaperSchedule,
    strengthen: bool = False,
    hull_cuts: bool = False,
) -> tuple[SparseMilp, VariableCatalog]:
    """Replace the flat charge cap with SOC-band dependent caps.

    One binary per band and step selects the active band while charging.
    The selected band's thresholds bind the reference energy through big-M
    rows with ``M = s_bess_max``, and the charge cap becomes
    ``sum_b beta_b * w_b / t_chg`` with ``w_b = u_b * S_bess``.

    Both options add rows that every integral solution already satisfies,
    so optimal values do not move; they only tighten the LP relaxation.

    strengthen
        ``sum_b w_b <= S_bess`` and the band thresholds written on ``w_b``
        instead of big-M.
    hull_cuts
        ``t_chg * P_chg <= p * S_bess + q * E_ref`` for every segment
        ``beta = p + q * soc`` of the concave upper hull of the taper step
        function (see :func:`taper_hull`).

    Steps whose charging is pinned off get band columns fixed at zero and
    no band rows.
    """
    if cat.u_band is not None:
        raise ValueError("tapering already applied")
    problems = validate_schedule(sched, cfg.soc_min, cfg.soc_max)
    if problems:
        raise ConfigError("invalid taper schedule", problems)

    Y, D, T = cat.shape
    B = len(sched)
    M = cfg.s_bess_max
    b = MilpBuilder.from_milp(milp)
    b.drop_rows(lambda nm: not nm.startswith("chg_cap["))
    u = np.empty((B, Y, D, T), dtype=np.int64)
    w = np.empty((B, Y, D, T), dtype=np.int64)
    S = cat.s_bess
    dark = milp.col_upper[cat.u_chg] == 0.0
    for y in range(Y):
        for d in range(D):
            for t in range(T):
                for k in range(B):
                    btag = f"[{k + 1},{y + 1},{d + 1},{t + 1}]"
                    u[k, y, d, t] = b.add_binary(f"u_band{btag}")
                    w[k, y, d, t] = b.add_col(f"w_band{btag}", 0.0, M)
                    if dark[y, d, t]:
                        b.hi[u[k, y, d, t]] = 0.0
                        b.hi[w[k, y, d, t]] = 0.0

    segments = taper_hull(sched) if hull_cuts else []
    for y in range(Y):
        for d in range(D):
            for t in range(T):
                if dark[y, d, t]:
                    continue
                tag = _tag(y, d, t)
                if cfg.band_reference == "start_of_interval":
                    e_ref = cat.e_init if t == 0 else cat.e_bess[y, d, t - 1]
                else:
                    e_ref = cat.e_bess[y, d, t]
                uu = u[:, y, d, t]
                ww = w[:, y, d, t]
                pc = cat.p_chg[y, d, t]
                b.add_eq(f"band_one{tag}", list(uu) + [cat.u_chg[y, d, t]], [1.0] * B + [-1.0], 0.0)
                for k, band in enumerate(sched.bands):
                    btag = f"[{k + 1},{y + 1},{d + 1},{t + 1}]"
                    b.add_ge(f"band_lo{btag}", [e_ref, S, uu[k]], [1.0, -band.lower, -M], -M)
                    b.add_le(f"band_hi{btag}", [e_ref, S, uu[k]], [1.0, -band.upper, M], M)
                    b.add_le(f"w_on{btag}", [ww[k], uu[k]], [1.0, -M], 0.0)
                    b.add_le(f"w_size{btag}", [ww[k], S], [1.0, -1.0], 0.0)
                    b.add_ge(f"w_floor{btag}", [ww[k], S, uu[k]], [1.0, -1.0, -M], -M)
                    if strengthen:
                        b.add_ge(f"band_lo_w{btag}", [e_ref, ww[k], S],
                                 [1.0, -(band.lower - cfg.soc_min), -cfg.soc_min], 0.0)
                        b.add_le(f"band_hi_w{btag}", [e_ref, ww[k], S],
                                 [1.0, cfg.soc_max - band.upper, -cfg.soc_max], 0.0)
                b.add_le(f"taper_cap{tag}", [pc] + list(ww),
                         [1.0] + [-bd.beta / cfg.t_chg for bd in sched.bands], 0.0)
                if strengthen:
                    b.add_le(f"w_total{tag}", list(ww) + [S], [1.0] * B + [-1.0], 0.0)
                for h, (p, q) in enumerate(segments):
                    b.add_le(f"taper_hull{h + 1}{tag}", [pc, S, e_ref], [cfg.t_chg, -p, -q], 0.0)
    return b.build(), replace(cat, u_band=u, w_band=w)


def taper_hull(sched: TaperSchedule) -> list[tuple[float, float]]:
    """Segments ``(p, q)`` of the least concave majorant of the taper cap.

    The cap as a function of SOC is the step function ``beta_b`` on band
    ``b`` (the larger value at shared endpoints). Each returned pair
    describes the line ``beta = p + q * soc`` over one hull segment, so
    ``cap(soc) <= min_s (p_s + q_s * soc)`` everywhere on the schedule.
    """
    pts = sorted({(b.lower, b.beta) for b in sched.bands} | {(b.upper, b.beta) for b in sched.bands},
                 key=lambda p: (p[0], -p[1]))
    hull: list[tuple[float, float]] = []
    for p in pts:
        if hull and hull[-1][0] == p[0]:
            continue
        while len(hull) >= 2:
            (x0, y0), (x1, y1) = hull[-2], hull[-1]
            if (x1 - x0) * (p[1] - y0) - (y1 - y0) * (p[0] - x0) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    segs = []
    for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
        q = (y1 - y0) / (x1 - x0)
        segs.append((y0 - q * x0, q))
    return segs


def build_model(cfg, prof, sched=None, strengthen=False, hull_cuts=False, fix_dark_charging=True):
    """Baseline model, with tapering when ``sched`` is given."""
    milp, cat = build_baseline(cfg, prof, fix_dark_charging=fix_dark_charging)
    if sched is not None:
        milp, cat = add_tapering(milp, cat, cfg, sched, strengthen=strengthen, hull_cuts=hull_cuts)
    return milp, cat


def fix_sizes(milp: SparseMilp, cat: VariableCatalog, s_pv=None, s_bess=None) -> SparseMilp:
    """Pin the PV and/or BESS size through column bounds."""
    lo = np.array(milp.col_lower)
    hi = np.array(milp.col_upper)
    for j, v in ((cat.s_pv, s_pv), (cat.s_bess, s_bess)):
        if v is not None:
            if not milp.col_lower[j] <= v <= milp.col_upper[j]:
                raise ValueError(
                    f"fixed {milp.col_names[j]} = {v!r} is outside [{milp.col_lower[j]!r}, {milp.col_upper[j]!r}]"
                )
            lo[j] = hi[j] = float(v)
    return milp.with_bounds(lo, hi)


# ---------------------------------------------------------------- solutions


@dataclass(frozen=True)
class PlanSolution:
    """Sizing and dispatch read back from a column vector.

    Dispatch arrays are shaped ``(Y, D, T)``; ``band`` holds the 0-based
    active band index, -1 when no band is selected.
    """

    s_pv: float
    s_bess: float
    e_init: float
    c_pv_deg: float
    objective: float
    p_chg: np.ndarray
    p_dchg: np.ndarray
    p_ls: np.ndarray
    p_curt: np.ndarray
    e_bess: np.ndarray
    u_chg: np.ndarray
    u_dchg: np.ndarray
    band: np.ndarray
    status: str = "optimal"
    gap: float = 0.0
    bound: float = np.nan
    extra: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.p_chg.shape

    @property
    def soc(self) -> np.ndarray:
        if self.s_bess > 0:
            return self.e_bess / self.s_bess
        return np.full(self.shape, np.nan)

    @property
    def status_label(self) -> str:
        return f"feasible({self.gap:.6g})" if self.status == "feasible" else self.status


def extract_solution(x, cat: VariableCatalog, objective=None, status="optimal", gap=0.0, bound=np.nan) -> PlanSolution:
    x = np.asarray(x, dtype=float)
    u_c = np.round(x[cat.u_chg])
    band = np.full(cat.shape, -1, dtype=np.int64)
    if cat.u_band is not None:
        ub = np.round(x[cat.u_band])
        on = ub.max(axis=0) > 0.5
        band[on] = np.argmax(ub, axis=0)[on]
    return PlanSolution(
        s_pv=float(x[cat.s_pv]),
        s_bess=float(x[cat.s_bess]),
        e_init=float(x[cat.e_init]),
        c_pv_deg=float(x[cat.c_pv_deg]),
        objective=float(objective) if objective is not None else np.nan,
        p_chg=x[cat.p_chg],
        p_dchg=x[cat.p_dchg],
        p_ls=x[cat.p_ls],
        p_curt=x[cat.p_curt],
        e_bess=x[cat.e_bess],
        u_chg=u_c,
        u_dchg=np.round(x[cat.u_dchg]),
        band=band,
        status=status,
        gap=float(gap),
        bound=float(bound),
    )


def solution_to_vector(sol: PlanSolution, cat: VariableCatalog, n_cols: int) -> np.ndarray:
    """Inverse of :func:`extract_solution` (band products rebuilt from ``band``)."""
    x = np.zeros(n_cols)
    x[cat.s_pv] = sol.s_pv
    x[cat.s_bess] = sol.s_bess
    x[cat.e_init] = sol.e_init
    x[cat.c_pv_deg] = sol.c_pv_deg
    for name in ("p_chg", "p_dchg", "p_ls", "p_curt", "u_chg", "u_dchg"):
        x[getattr(cat, name)] = getattr(sol, name)
    x[cat.e_bess] = sol.e_bess
    if cat.u_band is not None:
        for k in range(cat.n_bands):
            on = sol.band == k
            x[cat.u_band[k]] = on.astype(float)
            x[cat.w_band[k]] = np.where(on, sol.s_bess, 0.0)
    return x


def plan_objective(cfg: PlanningConfig, sol: PlanSolution) -> float:
    return (
        sol.s_pv * cfg.c_pv_capital
        + sol.s_bess * cfg.c_bess_capital
        + sol.c_pv_deg * cfg.y_mg
        + cfg.alpha * cfg.c_ls_penalty * float(sol.p_ls.sum())
    )


# ---------------------------------------------------------------- checking


@dataclass(frozen=True)
class Residual:
    """One violated rule. ``index`` is 1-based ``(year, day, hour)`` or empty."""

    rule: str
    index: tuple
    value: float

    def __str__(self):
        where = "[" + ",".join(map(str, self.index)) + "]" if self.index else ""
        return f"{self.rule}{where}: {self.value:.6g}"


def check_solution(
    cfg: PlanningConfig,
    prof: Profiles,
    sched: TaperSchedule | None,
    sol: PlanSolution,
    tol: float = 1e-6,
) -> list[Residual]:
    """Evaluate ``sol`` against the original, non-linearised planning rules.

    Every reported value is the amount by which a rule is broken (MW, MWh
    or currency); an empty list means every rule holds within ``tol``. Band
    membership is tested on ``soc = E / S_bess``, so its slack in SOC units
    is ``tol / S_bess``.
    """
    if sol.shape != prof.shape:
        raise ValueError(f"solution shape {sol.shape} does not match profiles {prof.shape}")
    out: list[Residual] = []
    Y, D, T = prof.shape
    S = sol.s_bess

    def flag(rule, index, value):
        if value > tol:
            out.append(Residual(rule, index, float(value)))

    flag("pv_size_bounds", (), max(-sol.s_pv, sol.s_pv - cfg.s_pv_max))
    flag("bess_size_bounds", (), max(-S, S - cfg.s_bess_max))
    flag("pv_degradation_cost", (),
         abs(sol.c_pv_deg - cfg.gamma_pv_rep * cfg.c_pv_capital * sol.s_pv * cfg.delta_pv_deg))
    flag("init_soc_bounds", (), max(cfg.soc_min * S - sol.e_init, sol.e_init - cfg.soc_max * S))
    if cfg.fixed_init_soc is not None:
        flag("init_soc_fixed", (), abs(sol.e_init - cfg.fixed_init_soc * S))
    if np.isfinite(sol.objective):
        flag("objective", (), abs(sol.objective - plan_objective(cfg, sol)) / max(1.0, abs(sol.objective)))

    bands = sched.bands if sched is not None else ()
    for y in range(Y):
        eta_y = pv_efficiency(cfg, y + 1)
        for d in range(D):
            prev = sol.e_init
            for t in range(T):
                ix = (y + 1, d + 1, t + 1)
                pc, pd = sol.p_chg[y, d, t], sol.p_dchg[y, d, t]
                ls, cu, e = sol.p_ls[y, d, t], sol.p_curt[y, d, t], sol.e_bess[y, d, t]
                uc, ud = sol.u_chg[y, d, t], sol.u_dchg[y, d, t]
                load = prof.load[y, d, t]
                avail = eta_y * prof.pv_cf[y, d, t] * sol.s_pv
                flag("power_balance", ix, abs(pd + avail + ls - load - pc - cu))
                flag("curtailment_bounds", ix, max(-cu, cu - avail))
                flag("shedding_bounds", ix, max(-ls, ls - load))
                flag("soc_bounds", ix, max(cfg.soc_min * S - e, e - cfg.soc_max * S))
                flag("binary_values", ix, max(min(abs(uc), abs(uc - 1)), min(abs(ud), abs(ud - 1))))
                flag("exclusivity", ix, uc + ud - 1.0)
                flag("charge_nonneg", ix, -pc)
                flag("discharge_nonneg", ix, -pd)
                flag("charge_cap", ix, pc - S / cfg.t_chg)
                flag("charge_activation", ix, pc - uc * cfg.m_bess)
                flag("discharge_cap", ix, pd - S / cfg.t_dchg)
                flag("discharge_activation", ix, pd - ud * cfg.m_bess)
                flag("energy_recursion", ix, abs(e - prev - cfg.eta_chg * pc + pd / cfg.eta_dchg))
                if sched is not None:
                    k = int(sol.band[y, d, t])
                    if cfg.band_reference == "start_of_interval":
                        e_ref = prev
                    else:
                        e_ref = e
                    if uc > 0.5:
                        if k < 0 or k >= len(bands):
                            flag("band_selection", ix, 1.0)
                            soc = e_ref / S if S > 0 else 0.0
                            k = sched.band_of(soc)
                        if k >= 0:
                            bd = bands[k]
                            # SOC membership scaled back to energy: tol/S in SOC is tol in MWh
                            flag("band_membership", ix, max(bd.lower * S - e_ref, e_ref - bd.upper * S))
                            flag("taper_cap", ix, pc - bd.beta * S / cfg.t_chg)
                    else:
                        if k >= 0:
                            flag("band_selection", ix, 1.0)
                        flag("taper_cap", ix, pc)
                prev = e
            if cfg.terminal_soc_constraint:
                flag("terminal_soc", (y + 1, d + 1), sol.e_init - prev)
    return out


# ---------------------------------------------------------------- heuristic


def greedy_dispatch(
    cfg: PlanningConfig,
    prof: Profiles,
    sched: TaperSchedule | None,
    s_pv: float,
    s_bess: float,
    e_init: float,
) -> PlanSolution:
    """Rule-based dispatch for fixed sizes, honouring the taper schedule.

    Each step charges as much PV surplus as the cap of the best reachable
    band allows, otherwise discharges to cover the deficit and sheds the
    rest. The result is feasible but not necessarily optimal; it serves as
    a starting guess for branch and bound.
    """
    Y, D, T = prof.shape
    out = {k: np.zeros(prof.shape) for k in ("p_chg", "p_dchg", "p_ls", "p_curt", "e", "u_c", "u_d")}
    band = np.full(prof.shape, -1, dtype=np.int64)
    S = s_bess
    bands = sched.bands if sched is not None else None
    for y in range(Y):
        eta_y = pv_efficiency(cfg, y + 1)
        for d in range(D):
            e = e_init
            for t in range(T):
                avail = eta_y * prof.pv_cf[y, d, t] * s_pv
                net = avail - prof.load[y, d, t]
                pc = pd = 0.0
                k_best = -1
                if net > 0 and S > 0:
                    if bands is None:
                        pc = min(net, S / cfg.t_chg, (cfg.soc_max * S - e) / cfg.eta_chg)
                    else:
                        start = e if cfg.band_reference == "start_of_interval" else None
                        for k, bd in enumerate(bands):
                            cap = min(net, bd.beta * S / cfg.t_chg)
                            if start is not None:
                                if not bd.lower * S - 1e-12 <= start <= bd.upper * S + 1e-12:
                                    continue
                                hi_p = min(cap, (cfg.soc_max * S - e) / cfg.eta_chg)
                                lo_p = 0.0
                            else:
                                lo_p = max(0.0, (bd.lower * S - e) / cfg.eta_chg)
                                hi_p = min(cap, (bd.upper * S - e) / cfg.eta_chg)
                            if hi_p >= lo_p and hi_p > pc:
                                pc, k_best = hi_p, k
                    pc = max(pc, 0.0)
                elif net < 0 and S > 0:
                    pd = min(-net, S / cfg.t_dchg, max(e - cfg.soc_min * S, 0.0) * cfg.eta_dchg)
                if pc > 0:
                    out["u_c"][y, d, t] = 1.0
                    band[y, d, t] = k_best
                elif pd > 0:
                    out["u_d"][y, d, t] = 1.0
                e = e + cfg.eta_chg * pc - pd / cfg.eta_dchg
                out["p_chg"][y, d, t] = pc
                out["p_dchg"][y, d, t] = pd
                out["p_curt"][y, d, t] = max(net - pc, 0.0)
                out["p_ls"][y, d, t] = max(-net - pd, 0.0)
                out["e"][y, d, t] = e
    sol = PlanSolution(
        s_pv=s_pv, s_bess=S, e_init=e_init,
        c_pv_deg=cfg.gamma_pv_rep * cfg.c_pv_capital * s_pv * cfg.delta_pv_deg,
        objective=np.nan,
        p_chg=out["p_chg"], p_dchg=out["p_dchg"], p_ls=out["p_ls"], p_curt=out["p_curt"],
        e_bess=out["e"], u_chg=out["u_c"], u_dchg=out["u_d"], band=band, status="heuristic",
    )
    return replace(sol, objective=plan_objective(cfg, sol))


def planning_heuristic(
    cat: VariableCatalog,
    cfg: PlanningConfig,
    prof: Profiles,
    sched: TaperSchedule | None,
    scales=(1.0, 1.05, 1.15),
    eps: float = 1e-7,
):
    """Branch-and-bound callback proposing binary patterns from an LP point.

    Candidates are the plain rounding of the LP flows plus greedy dispatches
    (see :func:`greedy_dispatch`) at the LP sizes scaled by each factor in
    ``scales``. Branch and bound fixes each pattern's binaries and re-solves
    the continuous part, so sizes and flows are re-optimised afterwards.
    """

    def heuristic(milp: SparseMilp, x: np.ndarray):
        cands = [_rounded(x, cat, cfg, sched, eps)]
        lo = milp.col_lower
        hi = milp.col_upper
        for f in scales:
            s_pv = float(np.clip(x[cat.s_pv] * f, lo[cat.s_pv], hi[cat.s_pv]))
            s_bess = float(np.clip(x[cat.s_bess] * f, lo[cat.s_bess], hi[cat.s_bess]))
            if cfg.fixed_init_soc is not None:
                e0 = cfg.fixed_init_soc * s_bess
            else:
                e0 = x[cat.e_init] / x[cat.s_bess] * s_bess if x[cat.s_bess] > eps else 0.0
            sol = greedy_dispatch(cfg, prof, sched, s_pv, s_bess, e0)
            cands.append(solution_to_vector(sol, cat, milp.n_cols))
        return np.array(cands)

    return heuristic


def _rounded(x, cat, cfg, sched, eps):
    z = x.copy()
    pc = x[cat.p_chg]
    pd = x[cat.p_dchg]
    uc = (pc > eps) & (pc >= pd)
    ud = (pd > eps) & ~uc
    z[cat.u_chg] = uc
    z[cat.u_dchg] = ud
    if cat.u_band is not None:
        S = x[cat.s_bess]
        e = x[cat.e_bess]
        if cfg.band_reference == "start_of_interval":
            e_ref = np.concatenate([np.full(cat.shape[:2] + (1,), x[cat.e_init]), e[..., :-1]], axis=2)
        else:
            e_ref = e
        soc = e_ref / S if S > eps else np.zeros(cat.shape)
        z[cat.u_band] = 0.0
        for ix in zip(*np.nonzero(uc)):
            k = sched.band_of(float(soc[ix]))
            if k < 0:
                k = len(sched) - 1
            z[cat.u_band[(k,) + ix]] = 1.0
    return z

"""Text formats: key-value run configuration, profile CSV and plan CSVs.

Configuration files hold one ``key = value`` pair per line; ``#`` starts a
comment. Values are Python literals (numbers, booleans, lists of tuples),
bare words for enumerations, or ``fixed_fraction(f)`` for the initial SOC
mode. Keys:

* every :class:`~taperplan.domain.PlanningConfig` field by name;
* ``bands = [(lower, upper, beta), ...]`` for the taper schedule (default:
  the four-band schedule over ``[soc_min, soc_max]``);
* ``model_years``: planning years built explicitly; fewer than ``y_mg``
  rescales ``alpha`` so totals keep the full-horizon weight;
* ``solver_time_limit_s``, ``solver_gap``, ``solver_node_limit``;
* ``cell_capacity_ah``, ``cell_n_series``, ``cell_v_cell_nominal``,
  ``cell_r_s``, ``cell_dt``, ``cell_soc0``, ``cell_soc_target``,
  ``cell_constant_rate`` and ``cell_taper = [(soc_threshold, rate), ...]``.

All numbers are written back with ``repr`` so every value round-trips.
"""

from __future__ import annotations

import ast
import csv
import os
import re
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .cellsim import ConstantC, PackSpec, Tapered
from .domain import (
    ConfigError,
    PlanningConfig,
    Profiles,
    TaperSchedule,
    Violation,
    desk_scale,
    validate_config,
    validate_profiles,
)
from .planmodel import PlanSolution

_CALL = re.compile(r"^([A-Za-z_]\w*)\s*\(\s*([^)]*)\s*\)$")
_WORD = re.compile(r"^[A-Za-z_]\w*$")
_BOOLS = {"true": True, "yes": True, "on": True, "false": False, "no": False, "off": False}


@dataclass(frozen=True)
class SolverSettings:
    time_limit_s: float = 3600.0
    gap_tol: float = 0.0
    node_limit: int | None = None


@dataclass(frozen=True)
class CellSettings:
    pack: PackSpec = field(default_factory=PackSpec)
    dt: float = 1.0
    soc0: float = 0.0
    soc_target: float = 1.0
    constant_rate: float = 1.0
    taper: Tapered = field(default_factory=Tapered)

    @property
    def constant(self) -> ConstantC:
        return ConstantC(self.constant_rate)


@dataclass(frozen=True)
class RunConfig:
    """Everything a configuration file can set, with defaults for the rest."""

    planning: PlanningConfig = field(default_factory=PlanningConfig)
    bands: TaperSchedule | None = None
    model_years: int | None = None
    solver: SolverSettings = field(default_factory=SolverSettings)
    cell: CellSettings = field(default_factory=CellSettings)
    source: str = "<defaults>"

    @property
    def schedule(self) -> TaperSchedule:
        if self.bands is not None:
            return self.bands
        return TaperSchedule.default(self.planning.soc_min, self.planning.soc_max)

    @property
    def years(self) -> int:
        return self.model_years if self.model_years is not None else self.planning.y_mg

    def scaled_planning(self) -> PlanningConfig:
        """Planning parameters with ``alpha`` rescaled to the modelled years."""
        if self.years == self.planning.y_mg:
            return self.planning
        return desk_scale(self.planning, self.years)


def _value(raw: str):
    raw = raw.strip()
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        pass
    low = raw.lower()
    if low in _BOOLS:
        return _BOOLS[low]
    m = _CALL.match(raw)
    if m:
        return (m.group(1), ast.literal_eval(m.group(2)) if m.group(2) else None)
    if _WORD.match(raw):
        return raw
    raise ValueError(f"cannot parse value {raw!r}")


def _coerce(kind, value, key):
    if kind is bool:
        if isinstance(value, bool):
            return value
        raise ValueError(f"{key} expects true or false")
    if kind is int:
        if isinstance(value, bool) or not float(value).is_integer():
            raise ValueError(f"{key} expects an integer")
        return int(value)
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"{key} expects a number")
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise ValueError(f"{key} expects a word")
        return value
    raise AssertionError(kind)


_PLANNING_TYPES = {
    f.name: {"float": float, "int": int, "str": str, "bool": bool}[f.type] for f in fields(PlanningConfig)
}
_CELL_KEYS = {
    "cell_capacity_ah": float,
    "cell_n_series": int,
    "cell_v_cell_nominal": float,
    "cell_r_s": float,
    "cell_dt": float,
    "cell_soc0": float,
    "cell_soc_target": float,
    "cell_constant_rate": float,
}


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Parse configuration text. Raises :class:`ConfigError` listing every problem."""
    seen: dict[str, int] = {}
    planning: dict = {}
    cell: dict = {}
    other: dict = {}
    problems: list[Violation] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(Violation(f"line {lineno}", "expected 'key = value'", line))
            continue
        key, raw = (s.strip() for s in line.split("=", 1))
        if key in seen:
            problems.append(Violation(key, "key given once", f"lines {seen[key]} and {lineno}"))
            continue
        seen[key] = lineno
        try:
            val = _value(raw)
            if key == "init_soc_mode":
                if isinstance(val, tuple) and val[0] == "fixed_fraction":
                    planning["init_soc_mode"] = "fixed_fraction"
                    if val[1] is not None:
                        planning["init_soc_fraction"] = float(val[1])
                else:
                    planning["init_soc_mode"] = _coerce(str, val, key)
            elif key in _PLANNING_TYPES:
                planning[key] = _coerce(_PLANNING_TYPES[key], val, key)
            elif key in _CELL_KEYS:
                cell[key[5:]] = _coerce(_CELL_KEYS[key], val, key)
            elif key == "cell_taper":
                cell["taper"] = Tapered(tuple((float(s), float(r)) for s, r in val))
            elif key == "bands":
                other["bands"] = TaperSchedule.from_tuples(val)
            elif key == "model_years":
                other["model_years"] = None if val is None else _coerce(int, val, key)
            elif key == "solver_time_limit_s":
                other["time_limit_s"] = _coerce(float, val, key)
            elif key == "solver_gap":
                other["gap_tol"] = _coerce(float, val, key)
            elif key == "solver_node_limit":
                other["node_limit"] = None if val is None else _coerce(int, val, key)
            else:
                problems.append(Violation(key, "known key", f"line {lineno}"))
        except (ValueError, TypeError, SyntaxError) as exc:
            problems.append(Violation(key, "valid value", f"line {lineno}: {exc}"))
    if problems:
        raise ConfigError(f"{source}: invalid configuration", problems)

    cfg = PlanningConfig(**planning)
    pack_kw = {k: cell.pop(k) for k in ("capacity_ah", "n_series", "v_cell_nominal", "r_s") if k in cell}
    try:
        pack = PackSpec(**pack_kw)
        cell_cfg = CellSettings(pack=pack, **cell)
        solver = SolverSettings(
            **{k: other.pop(k) for k in ("time_limit_s", "gap_tol", "node_limit") if k in other}
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: invalid cell or solver settings", [Violation("cell", str(exc))]) from exc
    run = RunConfig(planning=cfg, solver=solver, cell=cell_cfg, source=source, **other)

    report = validate_config(cfg, run.schedule)
    if run.model_years is not None and not 1 <= run.model_years <= cfg.y_mg:
        report.append(Violation("model_years", "1 <= model_years <= y_mg"))
    if solver.time_limit_s <= 0:
        report.append(Violation("solver_time_limit_s", "solver_time_limit_s > 0"))
    if solver.gap_tol < 0:
        report.append(Violation("solver_gap", "solver_gap >= 0"))
    if report:
        raise ConfigError(f"{source}: configuration violates model invariants", report)
    return run


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config(text, str(path))


def config_text(run: RunConfig) -> str:
    """Render ``run`` in the file format accepted by :func:`parse_config`."""
    cfg = run.planning
    lines = ["# planning parameters (placeholder costs, not calibrated)"]
    for f in fields(PlanningConfig):
        if f.name in ("init_soc_mode", "init_soc_fraction"):
            continue
        v = getattr(cfg, f.name)
        lines.append(f"{f.name} = {v if isinstance(v, str) else repr(v)}")
    if cfg.init_soc_mode == "fixed_fraction":
        lines.append(f"init_soc_mode = fixed_fraction({cfg.init_soc_fraction!r})")
    else:
        lines.append("init_soc_mode = free")
    bands = ", ".join(f"({b.lower!r}, {b.upper!r}, {b.beta!r})" for b in run.schedule.bands)
    lines += ["", "# taper schedule: (tau_lower, tau_upper, beta)", f"bands = [{bands}]"]
    lines += ["", "# solver", f"solver_time_limit_s = {run.solver.time_limit_s!r}", f"solver_gap = {run.solver.gap_tol!r}"]
    if run.solver.node_limit is not None:
        lines.append(f"solver_node_limit = {run.solver.node_limit}")
    if run.model_years is not None:
        lines.append(f"model_years = {run.model_years}")
    c = run.cell
    steps = ", ".join(f"({s!r}, {r!r})" for s, r in c.taper.steps_)
    lines += [
        "",
        "# charging simulator",
        f"cell_capacity_ah = {c.pack.capacity_ah!r}",
        f"cell_n_series = {c.pack.n_series}",
        f"cell_v_cell_nominal = {c.pack.v_cell_nominal!r}",
        f"cell_r_s = {c.pack.r_s!r}",
        f"cell_dt = {c.dt!r}",
        f"cell_soc0 = {c.soc0!r}",
        f"cell_soc_target = {c.soc_target!r}",
        f"cell_constant_rate = {c.constant_rate!r}",
        f"cell_taper = [{steps}]",
    ]
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ profiles


def read_profile_csv(path, years: int = 1) -> Profiles:
    """Read ``hour,load_mw,pv_cf`` rows (optionally with a leading ``day``).

    Hours are 1-based and must run 1..T without gaps for every day. The
    representative days are repeated for ``years`` planning years.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read profile {path}: {exc.strerror or exc}") from exc
    with fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"{path}: profile has no rows")
    need = {"hour", "load_mw", "pv_cf"}
    if not need <= set(rows[0]):
        raise ConfigError(f"{path}: profile header must contain {sorted(need)}")
    days: dict[int, dict[int, tuple[float, float]]] = {}
    try:
        for k, r in enumerate(rows, 2):
            d = int(r["day"]) if r.get("day") not in (None, "") else 1
            h = int(r["hour"])
            if h in days.setdefault(d, {}):
                raise ConfigError(f"{path}: line {k} repeats day {d} hour {h}")
            days[d][h] = (float(r["load_mw"]), float(r["pv_cf"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad profile value ({exc})") from exc
    day_ids = sorted(days)
    T = len(days[day_ids[0]])
    if day_ids != list(range(1, len(day_ids) + 1)):
        raise ConfigError(f"{path}: days must be numbered 1..D")
    for d in day_ids:
        if sorted(days[d]) != list(range(1, T + 1)):
            raise ConfigError(f"{path}: day {d} must list hours 1..{T}")
    load = np.array([[days[d][h][0] for h in range(1, T + 1)] for d in day_ids])
    pv = np.array([[days[d][h][1] for h in range(1, T + 1)] for d in day_ids])
    prof = Profiles.from_days(load, pv, years=years)
    bad = validate_profiles(prof)
    if bad:
        raise ConfigError(f"{path}: invalid profile", bad)
    return prof


def write_profile_csv(path, prof: Profiles) -> None:
    rows = [["day", "hour", "load_mw", "pv_cf"]]
    for d in range(prof.days):
        for t in range(prof.hours):
            rows.append([d + 1, t + 1, repr(float(prof.load[0, d, t])), repr(float(prof.pv_cf[0, d, t]))])
    write_rows(path, rows)


# --------------------------------------------------------------- plan output

SIZING_KEYS = ("status", "objective", "bound", "gap", "s_pv_mw", "s_bess_mwh", "e_init_mwh", "c_pv_deg")
DISPATCH_HEADER = [
    "year", "day", "hour", "p_chg_mw", "p_dchg_mw", "p_ls_mw", "p_curt_mw", "e_bess_mwh", "soc",
    "u_chg", "u_dchg", "band",
]


def write_rows(path, rows) -> None:
    """Write CSV rows atomically (temporary file in the same directory, then rename)."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _num(v) -> str:
    return repr(float(v))


def sizing_rows(sol: PlanSolution):
    vals = (sol.status_label, sol.objective, sol.bound, sol.gap, sol.s_pv, sol.s_bess, sol.e_init, sol.c_pv_deg)
    return [["key", "value"]] + [[k, v if isinstance(v, str) else _num(v)] for k, v in zip(SIZING_KEYS, vals)]


def dispatch_rows(sol: PlanSolution):
    """Per-step rows; ``band`` is the 1-based active band, 0 when none."""
    rows = [DISPATCH_HEADER]
    soc = sol.soc
    Y, D, T = sol.shape
    for y in range(Y):
        for d in range(D):
            for t in range(T):
                i = (y, d, t)
                rows.append([
                    y + 1, d + 1, t + 1,
                    _num(sol.p_chg[i]), _num(sol.p_dchg[i]), _num(sol.p_ls[i]), _num(sol.p_curt[i]),
                    _num(sol.e_bess[i]), _num(soc[i]),
                    int(round(sol.u_chg[i])), int(round(sol.u_dchg[i])), int(sol.band[i]) + 1,
                ])
    return rows


def write_plan(directory, sol: PlanSolution) -> tuple[Path, Path]:
    directory = Path(directory)
    sizing = directory / "sizing.csv"
    dispatch = directory / "dispatch.csv"
    write_rows(sizing, sizing_rows(sol))
    write_rows(dispatch, dispatch_rows(sol))
    return sizing, dispatch


def read_plan(sizing_path, dispatch_path) -> PlanSolution:
    """Inverse of :func:`write_plan`. Raises :class:`ConfigError` on malformed files."""
    try:
        with open(sizing_path, newline="", encoding="utf-8") as fh:
            kv = {r[0]: r[1] for r in csv.reader(fh) if r and r[0] != "key"}
        with open(dispatch_path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read plan: {exc}") from exc
    missing = [k for k in SIZING_KEYS if k not in kv]
    if missing:
        raise ConfigError(f"{sizing_path}: missing keys {missing}")
    if not rows or list(rows[0]) != DISPATCH_HEADER:
        raise ConfigError(f"{dispatch_path}: header must be {','.join(DISPATCH_HEADER)}")
    try:
        idx = np.array([[int(r["year"]), int(r["day"]), int(r["hour"])] for r in rows]) - 1
        shape = tuple(int(v) for v in idx.max(axis=0) + 1)
        if idx.min() < 0 or len(rows) != np.prod(shape):
            raise ValueError("rows do not form a full year x day x hour grid")

        def grid(col, cast=float):
            a = np.full(shape, np.nan)
            a[idx[:, 0], idx[:, 1], idx[:, 2]] = [cast(r[col]) for r in rows]
            if np.isnan(a).any():
                raise ValueError(f"column {col} has gaps")
            return a

        status = kv["status"]
        return PlanSolution(
            s_pv=float(kv["s_pv_mw"]),
            s_bess=float(kv["s_bess_mwh"]),
            e_init=float(kv["e_init_mwh"]),
            c_pv_deg=float(kv["c_pv_deg"]),
            objective=float(kv["objective"]),
            p_chg=grid("p_chg_mw"),
            p_dchg=grid("p_dchg_mw"),
            p_ls=grid("p_ls_mw"),
            p_curt=grid("p_curt_mw"),
            e_bess=grid("e_bess_mwh"),
            u_chg=grid("u_chg"),
            u_dchg=grid("u_dchg"),
            band=(grid("band", int) - 1).astype(int),
            status=status.split("(")[0],
            gap=float(kv["gap"]),
            bound=float(kv["bound"]),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{dispatch_path}: {exc}") from exc

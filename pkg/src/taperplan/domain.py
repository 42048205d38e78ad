"""Planning parameters, load/PV profiles and SOC taper schedules."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

BAND_TOL = 1e-9

INIT_SOC_MODES = ("free", "fixed_fraction")
BAND_REFERENCES = ("end_of_interval", "start_of_interval")


@dataclass(frozen=True)
class PlanningConfig:
    """Cost, efficiency, SOC and big-M parameters of the planning model.

    Default cost figures are placeholders chosen only to give a well-scaled
    instance; they are not calibrated to any published case. The shedding
    penalty sits at value-of-lost-load scale, well above the marginal cost of
    serving the last MWh, so free-size plans shed nothing.

    Units: capital costs in $/MW (PV) and $/MWh (BESS), penalty in $/MWh,
    durations in hours, ``s_pv_max`` in MW, ``s_bess_max`` in MWh, ``m_bess``
    in MW.
    """

    c_pv_capital: float = 1.0e6
    c_bess_capital: float = 3.0e5
    gamma_pv_rep: float = 0.5
    t_chg: float = 4.0
    t_dchg: float = 4.0
    eta_chg: float = 0.95
    eta_dchg: float = 0.95
    eta_pv_init: float = 1.0
    delta_pv_deg: float = 0.005
    soc_min: float = 0.1
    soc_max: float = 1.0
    c_ls_penalty: float = 1.0e4
    y_mg: int = 25
    alpha: float = 365.0
    m_soc: float = 1.0
    m_bess: float = 10.0
    s_bess_max: float = 40.0
    s_pv_max: float = 20.0
    init_soc_mode: str = "free"
    init_soc_fraction: float = 0.5
    band_reference: str = "end_of_interval"
    terminal_soc_constraint: bool = False

    def with_(self, **changes) -> "PlanningConfig":
        return replace(self, **changes)

    @property
    def fixed_init_soc(self) -> float | None:
        """Initial SOC fraction when pinned, ``None`` when the optimizer chooses."""
        if self.init_soc_mode == "fixed_fraction":
            return self.init_soc_fraction
        return None

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True)
class Band:
    lower: float
    upper: float
    beta: float


@dataclass(frozen=True)
class TaperSchedule:
    """Ordered SOC bands, each with a charge-power tapering factor ``beta``."""

    bands: tuple[Band, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "bands", tuple(b if isinstance(b, Band) else Band(*map(float, b)) for b in self.bands)
        )

    @classmethod
    def from_tuples(cls, bands) -> "TaperSchedule":
        return cls(tuple(Band(float(lo), float(hi), float(beta)) for lo, hi, beta in bands))

    @classmethod
    def default(cls, soc_min: float = 0.1, soc_max: float = 1.0) -> "TaperSchedule":
        """Four bands stepping the allowed charge power 1 -> 0.5 -> 0.2 -> 0.1."""
        return cls.from_tuples(
            [(soc_min, 0.80, 1.0), (0.80, 0.90, 0.5), (0.90, 0.95, 0.2), (0.95, soc_max, 0.1)]
        )

    @classmethod
    def single_band(cls, soc_min: float, soc_max: float) -> "TaperSchedule":
        return cls.from_tuples([(soc_min, soc_max, 1.0)])

    def __len__(self):
        return len(self.bands)

    @property
    def lower(self) -> np.ndarray:
        return np.array([b.lower for b in self.bands])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b.upper for b in self.bands])

    @property
    def beta(self) -> np.ndarray:
        return np.array([b.beta for b in self.bands])

    def admissible(self, soc: float, tol: float = BAND_TOL) -> list[int]:
        """Indices of every band whose closed interval contains ``soc``."""
        return [k for k, b in enumerate(self.bands) if b.lower - tol <= soc <= b.upper + tol]

    def band_of(self, soc: float) -> int:
        """Most permissive (lowest-index) band containing ``soc``; -1 if none."""
        hits = self.admissible(soc)
        return hits[0] if hits else -1


@dataclass(frozen=True)
class Profiles:
    """Load (MW) and PV capacity factor arrays shaped ``(years, days, hours)``."""

    load: np.ndarray
    pv_cf: np.ndarray

    def __post_init__(self):
        load = np.asarray(self.load, dtype=float)
        pv = np.asarray(self.pv_cf, dtype=float)
        if load.ndim != 3 or pv.shape != load.shape:
            raise ValueError(
                f"load and pv_cf must share a (years, days, hours) shape, got {load.shape} and {pv.shape}"
            )
        load.setflags(write=False)
        pv.setflags(write=False)
        object.__setattr__(self, "load", load)
        object.__setattr__(self, "pv_cf", pv)

    @classmethod
    def from_days(cls, load, pv_cf, years: int = 1) -> "Profiles":
        """Repeat ``(days, hours)`` (or single-day ``(hours,)``) arrays for every year."""
        load = np.atleast_2d(np.asarray(load, dtype=float))
        pv_cf = np.atleast_2d(np.asarray(pv_cf, dtype=float))
        return cls(np.repeat(load[None], years, axis=0), np.repeat(pv_cf[None], years, axis=0))

    @property
    def years(self) -> int:
        return self.load.shape[0]

    @property
    def days(self) -> int:
        return self.load.shape[1]

    @property
    def hours(self) -> int:
        return self.load.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.load.shape

    def with_years(self, years: int) -> "Profiles":
        """First-year profile repeated ``years`` times."""
        return Profiles.from_days(self.load[0], self.pv_cf[0], years=years)


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str
    detail: str = ""

    def __str__(self):
        msg = f"{self.field}: {self.rule}"
        return f"{msg} ({self.detail})" if self.detail else msg


def validate_config(cfg: PlanningConfig, sched: TaperSchedule | None = None) -> list[Violation]:
    """Check every parameter and schedule invariant; return the broken ones.

    An empty list means the pair is usable. Nothing is raised here, callers
    decide what to do with a non-empty report.
    """
    out: list[Violation] = []

    def need(ok, name, rule, detail=""):
        if not ok:
            out.append(Violation(name, rule, detail))

    need(cfg.soc_min < cfg.soc_max, "soc_min", "soc_min < soc_max", f"{cfg.soc_min} vs {cfg.soc_max}")
    need(0.0 <= cfg.soc_min < 1.0, "soc_min", "0 <= soc_min < 1")
    need(0.0 < cfg.soc_max <= 1.0, "soc_max", "0 < soc_max <= 1")
    for name in ("eta_chg", "eta_dchg", "eta_pv_init"):
        v = getattr(cfg, name)
        need(0.0 < v <= 1.0, name, f"{name} in (0, 1]", str(v))
    need(0.0 <= cfg.delta_pv_deg < 1.0, "delta_pv_deg", "delta_pv_deg in [0, 1)")
    need(cfg.t_chg > 0, "t_chg", "t_chg > 0")
    need(cfg.t_dchg > 0, "t_dchg", "t_dchg > 0")
    for name in ("c_pv_capital", "c_bess_capital", "gamma_pv_rep", "c_ls_penalty", "alpha"):
        need(getattr(cfg, name) >= 0, name, f"{name} >= 0")
    need(cfg.y_mg >= 1, "y_mg", "y_mg >= 1")
    # zero is admitted: it describes a system without storage
    need(cfg.s_bess_max >= 0, "s_bess_max", "s_bess_max >= 0")
    need(cfg.s_pv_max >= 0, "s_pv_max", "s_pv_max >= 0")
    need(cfg.m_soc >= 1.0, "m_soc", "m_soc >= 1")
    if cfg.t_chg > 0 and cfg.t_dchg > 0:
        floor = cfg.s_bess_max / min(cfg.t_chg, cfg.t_dchg)
        need(
            cfg.m_bess >= floor * (1 - 1e-12),
            "m_bess",
            "m_bess >= s_bess_max / min(t_chg, t_dchg)",
            f"need >= {floor}",
        )
    need(cfg.init_soc_mode in INIT_SOC_MODES, "init_soc_mode", f"one of {INIT_SOC_MODES}")
    if cfg.init_soc_mode == "fixed_fraction":
        need(
            cfg.soc_min <= cfg.init_soc_fraction <= cfg.soc_max,
            "init_soc_fraction",
            "soc_min <= f <= soc_max",
            str(cfg.init_soc_fraction),
        )
    need(cfg.band_reference in BAND_REFERENCES, "band_reference", f"one of {BAND_REFERENCES}")

    if sched is not None:
        out.extend(validate_schedule(sched, cfg.soc_min, cfg.soc_max))
    return out


def validate_schedule(sched: TaperSchedule, soc_min: float, soc_max: float) -> list[Violation]:
    out: list[Violation] = []
    bands = sched.bands
    if not bands:
        return [Violation("bands", "at least one band")]
    for k, b in enumerate(bands):
        if not b.lower < b.upper:
            out.append(Violation("bands", "tau_lower < tau_upper", f"band {k}"))
        if not 0.0 < b.beta <= 1.0:
            out.append(Violation("bands", "beta in (0, 1]", f"band {k}: {b.beta}"))
    for k in range(len(bands) - 1):
        gap = bands[k + 1].lower - bands[k].upper
        if abs(gap) > BAND_TOL:
            out.append(
                Violation(
                    "bands",
                    "bands contiguous",
                    f"band {k} ends at {bands[k].upper}, band {k + 1} starts at {bands[k + 1].lower}",
                )
            )
        if bands[k + 1].beta > bands[k].beta:
            out.append(Violation("bands", "beta non-increasing", f"band {k + 1}"))
    if bands[0].beta != 1.0:
        out.append(Violation("bands", "first band beta = 1", str(bands[0].beta)))
    if bands[0].lower > soc_min + BAND_TOL or bands[-1].upper < soc_max - BAND_TOL:
        out.append(
            Violation(
                "bands",
                "bands cover [soc_min, soc_max]",
                f"[{bands[0].lower}, {bands[-1].upper}] vs [{soc_min}, {soc_max}]",
            )
        )
    return out


def validate_profiles(prof: Profiles) -> list[Violation]:
    out = []
    if min(prof.shape) < 1:
        out.append(Violation("profiles", "non-empty", str(prof.shape)))
    if not np.all(np.isfinite(prof.load)) or np.any(prof.load < 0):
        out.append(Violation("load", "load >= 0 everywhere"))
    if not np.all(np.isfinite(prof.pv_cf)) or np.any((prof.pv_cf < 0) | (prof.pv_cf > 1)):
        out.append(Violation("pv_cf", "pv_cf in [0, 1] everywhere"))
    return out


def pv_efficiency(cfg: PlanningConfig, y: int) -> float:
    """PV conversion efficiency in planning year ``y`` (1-based).

    Year one runs at ``eta_pv_init``; each later year loses the fraction
    ``delta_pv_deg`` of the previous year's value.
    """
    if y < 1:
        raise ValueError(f"year index must be >= 1, got {y}")
    eta = cfg.eta_pv_init
    for _ in range(y - 1):
        eta *= 1.0 - cfg.delta_pv_deg
    return eta


def desk_scale(cfg: PlanningConfig, years: int) -> PlanningConfig:
    """Rescale ``alpha`` so ``years`` modelled years weigh like the full horizon.

    Shedding totals and penalties then match a run that models all ``y_mg``
    years with the same representative day.
    """
    if years < 1:
        raise ValueError("years must be >= 1")
    return cfg.with_(alpha=cfg.alpha * cfg.y_mg / years)


@dataclass
class ConfigError(Exception):
    message: str
    problems: list = field(default_factory=list)

    def __str__(self):
        if not self.problems:
            return self.message
        return self.message + ": " + "; ".join(map(str, self.problems))

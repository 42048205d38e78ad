"""Time-stepped charging of a series Li-ion pack under CC or stepped-taper policies.

The pack is an ideal source ``n_series * v_cell_nominal`` behind a lumped
series resistance ``r_s``. State of charge is coulomb counted, so a 1C
charge from empty takes exactly one hour.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._accel import njit, pick

MAX_DT = 10.0
_SOC_TOL = 1e-12


class SimulationError(ValueError):
    pass


class StallError(SimulationError):
    pass


class PrecisionError(SimulationError):
    pass


@dataclass(frozen=True)
class PackSpec:
    capacity_ah: float = 100.0
    n_series: int = 40
    v_cell_nominal: float = 3.7
    r_s: float = 0.0

    def __post_init__(self):
        if self.capacity_ah <= 0:
            raise ValueError("capacity_ah must be > 0")
        if self.n_series < 1:
            raise ValueError("n_series must be >= 1")
        if self.v_cell_nominal <= 0:
            raise ValueError("v_cell_nominal must be > 0")
        if self.r_s < 0:
            raise ValueError("r_s must be >= 0")

    @property
    def v_open(self) -> float:
        return self.n_series * self.v_cell_nominal


@dataclass(frozen=True)
class ConstantC:
    rate: float = 1.0

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("C-rate must be non-negative")

    @property
    def name(self):
        return f"constant_{self.rate:g}C"

    def steps(self):
        return np.array([0.0]), np.array([float(self.rate)])


@dataclass(frozen=True)
class Tapered:
    """Stepped C-rate schedule; ``steps`` holds ``(soc_threshold, rate)`` pairs.

    The rate in force is the one whose threshold is the largest not exceeding
    the present SOC.
    """

    steps_: tuple[tuple[float, float], ...] = ((0.0, 1.0), (0.8, 0.5), (0.9, 0.2), (0.95, 0.1))

    def __post_init__(self):
        steps = tuple((float(s), float(r)) for s, r in self.steps_)
        object.__setattr__(self, "steps_", steps)
        if not steps or steps[0][0] != 0.0:
            raise ValueError("first taper threshold must be 0")
        thr = [s for s, _ in steps]
        if any(b <= a for a, b in zip(thr, thr[1:])):
            raise ValueError("taper thresholds must be strictly increasing")
        if thr[-1] >= 1.0:
            raise ValueError("taper thresholds must lie in [0, 1)")
        if any(r < 0 for _, r in steps):
            raise ValueError("C-rates must be non-negative")

    @property
    def name(self):
        return "taper_" + "-".join(f"{r:g}" for _, r in self.steps_)

    def steps(self):
        arr = np.array(self.steps_, dtype=float)
        return arr[:, 0].copy(), arr[:, 1].copy()


ChargePolicy = ConstantC | Tapered


@dataclass(frozen=True)
class ChargeTrace:
    """Per-step samples of one charging run plus its energy totals.

    Sample arrays hold the state at the END of each step. Energies are kWh,
    efficiency is percent.
    """

    dt: float
    t: np.ndarray
    soc: np.ndarray
    i_pack: np.ndarray
    v_pack: np.ndarray
    p_loss: np.ndarray
    terminal_time: float
    e_delivered: float
    e_loss: float
    e_net: float
    eta_chg: float

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_s", "soc", "i_a", "v_v", "p_loss_w"])
            for row in zip(self.t, self.soc, self.i_pack, self.v_pack, self.p_loss):
                w.writerow([repr(float(v)) for v in row])


def _charge_loop_py(cap_as, v_open, r_s, capacity_ah, thresholds, rates, soc0, soc_target, dt, max_steps):
    n_thr = thresholds.shape[0]
    t_out = np.empty(max_steps)
    soc_out = np.empty(max_steps)
    i_out = np.empty(max_steps)
    v_out = np.empty(max_steps)
    p_out = np.empty(max_steps)
    q = soc0 * cap_as
    q_target = soc_target * cap_as
    e_del = 0.0
    e_loss = 0.0
    soc = soc0
    k = 0
    while k < max_steps:
        j = 0
        for m in range(n_thr):
            if thresholds[m] <= soc + _SOC_TOL:
                j = m
        rate = rates[j]
        if rate <= 0.0:
            return k, -1, e_del, e_loss, t_out, soc_out, i_out, v_out, p_out
        i = rate * capacity_ah
        v = v_open + i * r_s
        p_loss = i * r_s * i
        e_del += v * i * dt
        e_loss += p_loss * dt
        q += i * dt
        soc = q / cap_as
        t_out[k] = (k + 1) * dt
        soc_out[k] = soc
        i_out[k] = i
        v_out[k] = v
        p_out[k] = p_loss
        k += 1
        if q >= q_target - _SOC_TOL * cap_as:
            return k, 1, e_del, e_loss, t_out, soc_out, i_out, v_out, p_out
    return k, 0, e_del, e_loss, t_out, soc_out, i_out, v_out, p_out


_charge_loop_nb = njit(_charge_loop_py)


def _charge_loop_np(cap_as, v_open, r_s, capacity_ah, thresholds, rates, soc0, soc_target, dt, max_steps):
    """Vectorized equivalent: integrate each constant-rate segment in closed form.

    Within a segment the current is constant, so the number of steps to the
    next threshold is a ceiling division; samples are filled with aranges.
    """
    q_target = soc_target * cap_as
    t_parts, q_parts, i_parts = [], [], []
    q = soc0 * cap_as
    k = 0
    status = 0
    while k < max_steps:
        soc = q / cap_as
        j = int(np.searchsorted(thresholds, soc + _SOC_TOL, side="right")) - 1
        rate = rates[max(j, 0)]
        if rate <= 0.0:
            status = -1
            break
        i = rate * capacity_ah
        stop = q_target
        if j + 1 < thresholds.shape[0]:
            stop = min(stop, thresholds[j + 1] * cap_as)
        n = int(np.ceil((stop - q) / (i * dt) - _SOC_TOL * cap_as / (i * dt)))
        n = max(n, 1)
        n = min(n, max_steps - k)
        steps = np.arange(1, n + 1)
        t_parts.append((k + steps) * dt)
        q_parts.append(q + steps * (i * dt))
        i_parts.append(np.full(n, i))
        q = q_parts[-1][-1]
        k += n
        if q >= q_target - _SOC_TOL * cap_as:
            status = 1
            break
    if t_parts:
        t_out = np.concatenate(t_parts)
        i_out = np.concatenate(i_parts)
        soc_out = np.concatenate(q_parts) / cap_as
    else:
        t_out = soc_out = i_out = np.empty(0)
    v_out = v_open + i_out * r_s
    p_out = i_out * r_s * i_out
    e_del = float(np.sum(v_out * i_out) * dt)
    e_loss = float(np.sum(p_out) * dt)
    return k, status, e_del, e_loss, t_out, soc_out, i_out, v_out, p_out


def simulate_charge(
    spec: PackSpec,
    policy: ChargePolicy,
    soc0: float = 0.0,
    soc_target: float = 1.0,
    dt: float = 1.0,
    backend: str | None = None,
) -> ChargeTrace:
    """Charge ``spec`` from ``soc0`` to ``soc_target`` with forward-Euler steps.

    Raises
    ------
    PrecisionError
        If ``dt`` exceeds 10 s.
    StallError
        If the policy prescribes zero current at an SOC the run reaches.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if dt > MAX_DT:
        raise PrecisionError(f"dt={dt} s exceeds the {MAX_DT} s step limit")
    if not 0.0 <= soc0 < soc_target <= 1.0:
        raise ValueError(f"need 0 <= soc0 < soc_target <= 1, got {soc0}, {soc_target}")
    thresholds, rates = policy.steps()
    cap_as = spec.capacity_ah * 3600.0
    positive = rates[rates > 0]
    if positive.size == 0:
        raise StallError(f"policy {policy.name} never charges")
    slowest = positive.min() * spec.capacity_ah
    max_steps = int(np.ceil((soc_target - soc0) * cap_as / (slowest * dt))) + 2

    loop = pick(_charge_loop_nb, _charge_loop_np, backend)
    k, status, e_del, e_loss, t, soc, i, v, p = loop(
        cap_as, float(spec.v_open), float(spec.r_s), float(spec.capacity_ah), thresholds, rates,
        float(soc0), float(soc_target), float(dt), max_steps,
    )
    if status == -1:
        soc_now = soc[k - 1] if k else soc0
        raise StallError(f"policy {policy.name} prescribes zero current at SOC {soc_now:.4f}")
    if status != 1:
        raise SimulationError("charge did not reach target within the step budget")

    e_delivered = e_del / 3.6e6
    e_loss_kwh = e_loss / 3.6e6
    e_net = e_delivered - e_loss_kwh
    eta = 100.0 * e_net / e_delivered if e_delivered > 0 else 100.0
    return ChargeTrace(
        dt=float(dt),
        t=t[:k].copy(),
        soc=soc[:k].copy(),
        i_pack=i[:k].copy(),
        v_pack=v[:k].copy(),
        p_loss=p[:k].copy(),
        terminal_time=float(t[k - 1]),
        e_delivered=e_delivered,
        e_loss=e_loss_kwh,
        e_net=e_net,
        eta_chg=eta,
    )


def compare_policies(spec, a, b, soc0=0.0, soc_target=1.0, dt=1.0):
    """Energy-loss reduction (kWh) and efficiency gain (points) of ``b`` over ``a``."""
    ta = simulate_charge(spec, a, soc0, soc_target, dt)
    tb = simulate_charge(spec, b, soc0, soc_target, dt)
    return ta.e_loss - tb.e_loss, tb.eta_chg - ta.eta_chg


@dataclass(frozen=True)
class SweepRow:
    r_s: float
    policy: str
    terminal_time: float
    e_delivered: float
    e_loss: float
    e_net: float
    eta_chg: float


SUMMARY_HEADER = [
    "r_s_ohm", "policy", "charging_time_s", "e_delivered_kwh", "e_loss_kwh", "e_net_kwh", "eta_chg_pct",
]


def sweep_resistance(
    spec: PackSpec,
    r_values: Sequence[float],
    policies: Sequence[ChargePolicy],
    soc0: float = 0.0,
    soc_target: float = 1.0,
    dt: float = 1.0,
) -> list[SweepRow]:
    """One row per (resistance, policy) pair, resistance-major order."""
    if len(r_values) == 0:
        raise ValueError("r_values must be non-empty")
    rows = []
    for r in r_values:
        if r < 0:
            raise ValueError(f"resistance must be >= 0, got {r}")
        pack = PackSpec(spec.capacity_ah, spec.n_series, spec.v_cell_nominal, float(r))
        for pol in policies:
            tr = simulate_charge(pack, pol, soc0, soc_target, dt)
            rows.append(SweepRow(float(r), pol.name, tr.terminal_time, tr.e_delivered, tr.e_loss, tr.e_net, tr.eta_chg))
    return rows


def write_summary(rows: Sequence[SweepRow], path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_HEADER)
        for r in rows:
            w.writerow([repr(r.r_s), r.policy, repr(r.terminal_time), repr(r.e_delivered),
                        repr(r.e_loss), repr(r.e_net), repr(r.eta_chg)])

import numpy as np
import pytest
from hypothesis import given, strategies as st

from taperplan.domain import (
    PlanningConfig,
    Profiles,
    TaperSchedule,
    desk_scale,
    pv_efficiency,
    validate_config,
    validate_profiles,
)


def rules(report):
    return [v.rule for v in report]


def test_default_config_and_schedule_are_valid():
    cfg = PlanningConfig(soc_min=0.2, soc_max=0.9)
    sched = TaperSchedule.from_tuples([(0.2, 0.8, 1.0), (0.8, 0.9, 0.5)])
    assert validate_config(cfg, sched) == []
    assert validate_config(PlanningConfig(), TaperSchedule.default()) == []


def test_swapped_soc_limits_named():
    report = validate_config(PlanningConfig(soc_min=0.9, soc_max=0.2))
    assert "soc_min < soc_max" in rules(report)
    assert all(v.field for v in report)


def test_band_gap_reported():
    cfg = PlanningConfig(soc_min=0.0, soc_max=1.0)
    sched = TaperSchedule.from_tuples([(0.0, 0.8, 1.0), (0.85, 1.0, 0.5)])
    report = validate_config(cfg, sched)
    assert rules(report) == ["bands contiguous"]
    assert "0.8" in report[0].detail and "0.85" in report[0].detail


@pytest.mark.parametrize(
    "bands, rule",
    [
        ([(0.1, 0.8, 0.9), (0.8, 1.0, 0.5)], "first band beta = 1"),
        ([(0.1, 0.8, 1.0), (0.8, 0.9, 0.2), (0.9, 1.0, 0.5)], "beta non-increasing"),
        ([(0.2, 0.8, 1.0), (0.8, 1.0, 0.5)], "bands cover [soc_min, soc_max]"),
        ([(0.1, 0.8, 1.0), (0.8, 1.0, 0.0)], "beta in (0, 1]"),
        ([], "at least one band"),
    ],
)
def test_schedule_rules(bands, rule):
    assert rule in rules(validate_config(PlanningConfig(), TaperSchedule.from_tuples(bands)))


@pytest.mark.parametrize(
    "kw, rule",
    [
        (dict(eta_chg=0.0), "eta_chg in (0, 1]"),
        (dict(eta_dchg=1.2), "eta_dchg in (0, 1]"),
        (dict(t_chg=0.0), "t_chg > 0"),
        (dict(m_bess=1.0), "m_bess >= s_bess_max / min(t_chg, t_dchg)"),
        (dict(m_soc=0.5), "m_soc >= 1"),
        (dict(init_soc_mode="fixed_fraction", init_soc_fraction=0.05), "soc_min <= f <= soc_max"),
        (dict(init_soc_mode="sometimes"), "one of ('free', 'fixed_fraction')"),
        (dict(band_reference="middle"), "one of ('end_of_interval', 'start_of_interval')"),
        (dict(delta_pv_deg=1.0), "delta_pv_deg in [0, 1)"),
        (dict(s_bess_max=-1.0), "s_bess_max >= 0"),
    ],
)
def test_config_rules(kw, rule):
    assert rule in rules(validate_config(PlanningConfig(**kw)))


def test_validation_is_pure():
    cfg = PlanningConfig(soc_min=0.9, soc_max=0.2)
    assert validate_config(cfg) == validate_config(cfg)
    assert cfg == PlanningConfig(soc_min=0.9, soc_max=0.2)


def test_single_band_accepted():
    cfg = PlanningConfig()
    assert validate_config(cfg, TaperSchedule.single_band(cfg.soc_min, cfg.soc_max)) == []


def test_pv_efficiency_examples():
    assert pv_efficiency(PlanningConfig(eta_pv_init=0.2, delta_pv_deg=0.0), 10) == 0.2
    assert pv_efficiency(PlanningConfig(eta_pv_init=0.2, delta_pv_deg=0.01), 1) == 0.2
    assert pv_efficiency(PlanningConfig(eta_pv_init=0.2, delta_pv_deg=0.01), 3) == pytest.approx(0.19602, abs=1e-15)
    with pytest.raises(ValueError):
        pv_efficiency(PlanningConfig(), 0)


@given(
    eta=st.floats(0.01, 1.0),
    delta=st.floats(0.0, 0.99),
    y=st.integers(1, 60),
)
def test_pv_efficiency_recursion_exact(eta, delta, y):
    cfg = PlanningConfig(eta_pv_init=eta, delta_pv_deg=delta)
    assert pv_efficiency(cfg, y + 1) == pv_efficiency(cfg, y) * (1.0 - delta)
    if delta > 1e-9:  # smaller steps can round away at double precision
        assert pv_efficiency(cfg, y + 1) < pv_efficiency(cfg, y)


def test_band_lookup_at_092():
    sched = TaperSchedule.default(0.1, 1.0)
    assert sched.admissible(0.92) == [2]
    assert sched.beta[sched.band_of(0.92)] == 0.2
    # shared thresholds admit both neighbours; the lower band wins
    assert sched.admissible(0.8) == [0, 1]
    assert sched.band_of(0.8) == 0
    assert sched.band_of(0.05) == -1


def test_profiles_shape_and_validation():
    prof = Profiles.from_days([[1.0, 2.0]], [[0.0, 0.5]], years=3)
    assert prof.shape == (3, 1, 2)
    assert validate_profiles(prof) == []
    with pytest.raises(ValueError):
        Profiles(np.zeros((1, 2)), np.zeros((1, 2)))
    bad = Profiles.from_days([[-1.0]], [[1.5]])
    assert {v.field for v in validate_profiles(bad)} == {"load", "pv_cf"}
    with pytest.raises(ValueError):
        prof.load[0, 0, 0] = 5.0


def test_desk_scale_preserves_weight():
    cfg = PlanningConfig(y_mg=25, alpha=365.0)
    small = desk_scale(cfg, 2)
    assert small.alpha * 2 == pytest.approx(cfg.alpha * 25)
    with pytest.raises(ValueError):
        desk_scale(cfg, 0)

import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from taperplan.cellsim import (
    ConstantC,
    PackSpec,
    PrecisionError,
    StallError,
    Tapered,
    compare_policies,
    simulate_charge,
    sweep_resistance,
    write_summary,
)

PACK = PackSpec(100.0, 40, 3.7, 0.0)


def loss_wh(r_s, policy):
    return simulate_charge(PackSpec(r_s=r_s), policy).e_loss * 1000.0


def test_lossless_constant_charge():
    tr = simulate_charge(PACK, ConstantC(1.0), 0.0, 1.0, 1.0)
    assert tr.terminal_time == 3600.0
    assert tr.e_loss == 0.0
    assert tr.eta_chg == 100.0
    assert tr.e_delivered == pytest.approx(14.8, rel=1e-12)


def test_tapered_time_matches_piecewise_sum():
    tr = simulate_charge(PackSpec(r_s=0.001), Tapered(), 0.0, 1.0, 1.0)
    assert abs(tr.terminal_time - (2880 + 720 + 900 + 1800)) <= 1.0


def test_constant_efficiency_closed_form():
    tr = simulate_charge(PackSpec(r_s=0.001), ConstantC(1.0))
    # 100 A for one hour through 1 mOhm is 10 Wh
    assert tr.e_loss * 1000 == pytest.approx(10.0, rel=1e-9)
    assert tr.eta_chg == pytest.approx(99.93, abs=0.01)


def test_taper_loss_closed_form():
    # 100^2*0.8 + 50^2*0.1 + 20^2*0.05 + 10^2*0.05 = 8650 A^2h -> 8.65 Wh at 1 mOhm
    assert loss_wh(0.001, Tapered()) == pytest.approx(8.65, rel=2e-3)


def test_compare_identity_and_gain():
    pack = PackSpec(r_s=0.01)
    assert compare_policies(pack, ConstantC(1.0), ConstantC(1.0)) == (0.0, 0.0)
    d_loss, gain = compare_policies(pack, ConstantC(1.0), Tapered())
    assert d_loss > 0
    # ohmic-only voltage model: 99.42 % -> 99.51 %, about 0.09 points
    assert gain == pytest.approx(0.06, abs=0.05)


def test_sweep_rows_and_linearity():
    rows = sweep_resistance(PACK, [0.0], [ConstantC(1.0), Tapered()])
    assert [r.e_loss for r in rows] == [0.0, 0.0]
    rows = sweep_resistance(PACK, [0.001, 0.01], [ConstantC(1.0)])
    assert rows[1].e_loss / rows[0].e_loss == pytest.approx(10.0, rel=0.01)
    rows = sweep_resistance(PACK, [0.001, 0.01], [Tapered()])
    assert rows[0].eta_chg == pytest.approx(99.94, abs=0.2)
    assert rows[1].eta_chg == pytest.approx(99.48, abs=0.2)
    with pytest.raises(ValueError):
        sweep_resistance(PACK, [], [Tapered()])
    with pytest.raises(ValueError):
        sweep_resistance(PACK, [-1.0], [Tapered()])


def test_trace_invariants_and_csv(tmp_path):
    tr = simulate_charge(PackSpec(r_s=0.01), Tapered(), 0.2, 0.97, 2.0)
    assert np.all(np.diff(tr.soc) >= 0)
    assert tr.soc[-1] >= 0.97 and tr.soc[-2] < 0.97
    assert tr.e_net == tr.e_delivered - tr.e_loss
    assert 0 <= tr.eta_chg <= 100
    path = tmp_path / "trace.csv"
    tr.to_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t_s", "soc", "i_a", "v_v", "p_loss_w"]
    assert len(rows) == len(tr.t) + 1
    assert float(rows[-1][0]) == tr.terminal_time


def test_summary_csv(tmp_path):
    rows = sweep_resistance(PACK, [0.001], [ConstantC(1.0)])
    path = tmp_path / "s.csv"
    write_summary(rows, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("r_s_ohm,policy,charging_time_s")
    assert float(lines[1].split(",")[2]) == 3600.0


def test_errors():
    with pytest.raises(PrecisionError):
        simulate_charge(PACK, ConstantC(1.0), dt=11.0)
    with pytest.raises(StallError):
        simulate_charge(PACK, Tapered(((0.0, 1.0), (0.9, 0.0))))
    with pytest.raises(StallError):
        simulate_charge(PACK, ConstantC(0.0))
    with pytest.raises(ValueError):
        simulate_charge(PACK, ConstantC(1.0), 0.5, 0.5)
    with pytest.raises(ValueError):
        Tapered(((0.1, 1.0),))
    with pytest.raises(ValueError):
        Tapered(((0.0, 1.0), (0.5, 0.5), (0.4, 0.2)))
    with pytest.raises(ValueError):
        PackSpec(r_s=-1)


def test_stall_above_start_only():
    # a zero rate the run never reaches is fine
    tr = simulate_charge(PACK, Tapered(((0.0, 1.0), (0.95, 0.0))), 0.0, 0.9)
    assert tr.terminal_time == pytest.approx(3240.0, abs=1.0)


def test_halving_dt_converges():
    a = simulate_charge(PackSpec(r_s=0.01), Tapered(), dt=2.0)
    b = simulate_charge(PackSpec(r_s=0.01), Tapered(), dt=1.0)
    assert abs(a.terminal_time - b.terminal_time) / b.terminal_time < 0.005
    assert abs(a.e_loss - b.e_loss) / b.e_loss < 0.005


def test_backends_agree():
    for pol in (ConstantC(1.0), Tapered()):
        a = simulate_charge(PackSpec(r_s=0.01), pol, backend="numba")
        b = simulate_charge(PackSpec(r_s=0.01), pol, backend="numpy")
        assert a.terminal_time == b.terminal_time
        assert a.e_loss == pytest.approx(b.e_loss, rel=1e-12)
        np.testing.assert_allclose(a.soc, b.soc, rtol=1e-12)


@settings(max_examples=25, deadline=None)
@given(
    r=st.floats(1e-4, 0.05),
    rates=st.lists(st.floats(0.05, 1.0), min_size=1, max_size=4),
)
def test_taper_never_faster_and_never_less_efficient(r, rates):
    rates = sorted(rates, reverse=True)
    thresholds = [0.0] + [0.8 + 0.05 * k for k in range(len(rates) - 1)]
    taper = Tapered(tuple(zip(thresholds, rates)))
    const = ConstantC(rates[0])
    pack = PackSpec(r_s=r)
    a = simulate_charge(pack, const, dt=5.0)
    b = simulate_charge(pack, taper, dt=5.0)
    assert b.terminal_time >= a.terminal_time
    assert b.eta_chg >= a.eta_chg - 1e-9


@settings(max_examples=20, deadline=None)
@given(r=st.floats(1e-4, 0.1), k=st.floats(1.5, 20.0))
def test_loss_scales_linearly_with_resistance(r, k):
    a = simulate_charge(PackSpec(r_s=r), Tapered(), dt=5.0)
    b = simulate_charge(PackSpec(r_s=r * k), Tapered(), dt=5.0)
    assert b.e_loss / a.e_loss == pytest.approx(k, rel=0.01)

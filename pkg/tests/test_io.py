import numpy as np
import pytest

from taperplan.domain import ConfigError, PlanningConfig, Profiles
from taperplan.io import (
    DISPATCH_HEADER,
    RunConfig,
    config_text,
    load_config,
    parse_config,
    read_plan,
    read_profile_csv,
    write_plan,
    write_profile_csv,
)
from taperplan.planmodel import extract_solution, build_model
from taperplan.milp import solve_milp


def test_defaults_round_trip():
    run = RunConfig()
    again = parse_config(config_text(run))
    assert again.planning == run.planning
    assert again.schedule == run.schedule
    assert again.cell == run.cell
    assert again.solver == run.solver


def test_values_and_words():
    run = parse_config(
        """
        # comment line
        y_mg = 4
        alpha = 2.5          # trailing comment
        band_reference = start_of_interval
        init_soc_mode = fixed_fraction(0.4)
        terminal_soc_constraint = yes
        bands = [(0.1, 0.9, 1.0), (0.9, 1.0, 0.3)]
        model_years = 2
        solver_time_limit_s = 30
        solver_node_limit = 500
        cell_r_s = 0.01
        cell_taper = [(0.0, 1.0), (0.9, 0.25)]
        """
    )
    p = run.planning
    assert (p.y_mg, p.alpha, p.band_reference) == (4, 2.5, "start_of_interval")
    assert p.init_soc_mode == "fixed_fraction" and p.init_soc_fraction == 0.4
    assert p.terminal_soc_constraint is True
    assert len(run.schedule.bands) == 2
    assert run.years == 2
    assert run.scaled_planning().alpha == pytest.approx(5.0)
    assert run.solver.time_limit_s == 30.0 and run.solver.node_limit == 500
    assert run.cell.pack.r_s == 0.01
    rt = parse_config(config_text(run))
    assert rt.planning == run.planning and rt.schedule == run.schedule and rt.cell == run.cell


@pytest.mark.parametrize(
    "text, field",
    [
        ("nonsense = 1", "nonsense"),
        ("alpha = 1\nalpha = 2", "alpha"),
        ("y_mg = 2.5", "y_mg"),
        ("alpha = [1,", "alpha"),
        ("just words", "line 1"),
        ("soc_min = 0.9\nsoc_max = 0.2", "soc_min"),
        ("model_years = 40", "model_years"),
        ("solver_gap = -1", "solver_gap"),
    ],
)
def test_config_errors_name_the_field(text, field):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert field in str(err.value)


def test_all_problems_reported_together():
    with pytest.raises(ConfigError) as err:
        parse_config("bogus = 1\nalso_bogus = 2")
    assert "bogus" in str(err.value) and "also_bogus" in str(err.value)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.cfg")


def test_profile_csv_round_trip(tmp_path):
    prof = Profiles.from_days([[0.5, 1.0, 1.5], [0.2, 0.3, 0.4]], [[0.0, 1.0, 0.25], [0.1, 0.2, 0.3]])
    path = tmp_path / "p.csv"
    write_profile_csv(path, prof)
    back = read_profile_csv(path, years=3)
    assert back.shape == (3, 2, 3)
    np.testing.assert_array_equal(back.load[2], prof.load[0])
    np.testing.assert_array_equal(back.pv_cf[1], prof.pv_cf[0])


def test_profile_without_day_column(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("hour,load_mw,pv_cf\n1,0.5,0\n2,1.5,0.5\n")
    assert read_profile_csv(path).shape == (1, 1, 2)


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("hour,load\n1,2\n", "header"),
        ("hour,load_mw,pv_cf\n1,0.5,0\n3,0.5,0\n", "hours 1..2"),
        ("hour,load_mw,pv_cf\n1,0.5,0\n1,0.5,0\n", "repeats"),
        ("hour,load_mw,pv_cf\n1,x,0\n", "bad profile value"),
        ("hour,load_mw,pv_cf\n1,0.5,1.5\n", "invalid profile"),
        ("hour,load_mw,pv_cf\n", "no rows"),
    ],
)
def test_profile_errors(tmp_path, body, fragment):
    path = tmp_path / "p.csv"
    path.write_text(body)
    with pytest.raises(ConfigError, match=fragment):
        read_profile_csv(path)


def test_plan_round_trip(tmp_path, t6):
    cfg, prof, sched = t6
    m, cat = build_model(cfg, prof, sched)
    r = solve_milp(m)
    sol = extract_solution(r.x, cat, r.objective, bound=r.bound)
    sizing, dispatch = write_plan(tmp_path, sol)
    assert dispatch.read_text().splitlines()[0] == ",".join(DISPATCH_HEADER)
    back = read_plan(sizing, dispatch)
    for name in ("p_chg", "p_dchg", "p_ls", "p_curt", "e_bess", "u_chg", "u_dchg", "band"):
        np.testing.assert_array_equal(getattr(back, name), getattr(sol, name))
    assert (back.s_pv, back.s_bess, back.objective, back.status) == (sol.s_pv, sol.s_bess, sol.objective, "optimal")
    # writing twice gives identical bytes and leaves no temporary files
    first = dispatch.read_bytes()
    write_plan(tmp_path, sol)
    assert dispatch.read_bytes() == first
    assert sorted(p.name for p in tmp_path.iterdir()) == ["dispatch.csv", "sizing.csv"]


def test_malformed_plan(tmp_path):
    (tmp_path / "s.csv").write_text("key,value\nstatus,optimal\n")
    (tmp_path / "d.csv").write_text(",".join(DISPATCH_HEADER) + "\n")
    with pytest.raises(ConfigError, match="missing keys"):
        read_plan(tmp_path / "s.csv", tmp_path / "d.csv")


def test_planning_config_field_types_cover_every_field():
    text = config_text(RunConfig(planning=PlanningConfig(init_soc_mode="fixed_fraction")))
    assert "init_soc_mode = fixed_fraction(0.5)" in text

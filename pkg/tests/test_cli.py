import json

import numpy as np
import pytest

from conftest import T6_LOAD, T6_PV, t6_config
from taperplan import cli
from taperplan.domain import Profiles
from taperplan.io import RunConfig, config_text, read_plan, write_profile_csv, write_rows


@pytest.fixture
def t6_files(tmp_path):
    cfg_path = tmp_path / "t6.cfg"
    cfg_path.write_text(config_text(RunConfig(planning=t6_config())))
    prof_path = tmp_path / "t6.csv"
    write_profile_csv(prof_path, Profiles.from_days([T6_LOAD], [T6_PV]))
    return tmp_path, str(cfg_path), str(prof_path)


def plan(cfg, prof, out, *extra):
    return cli.main(["plan", cfg, "--profile", prof, "--out", str(out), *extra])


def test_plan_writes_outputs_and_manifest(t6_files, capsys):
    tmp, cfg, prof = t6_files
    assert plan(cfg, prof, tmp / "p") == cli.EXIT_OK
    assert "objective 986.18552961" in capsys.readouterr().out
    man = json.loads((tmp / "p" / "manifest.json").read_text())
    assert man["command"] == "plan"
    assert set(man["output_hashes"]) == {"sizing.csv", "dispatch.csv"}
    assert len(man["input_hashes"]) == 2
    assert "taperplan" in man["versions"]


def test_plan_is_byte_deterministic(t6_files):
    tmp, cfg, prof = t6_files
    for k in range(3):
        assert plan(cfg, prof, tmp / f"r{k}") == 0
    blobs = {(tmp / f"r{k}" / "dispatch.csv").read_bytes() for k in range(3)}
    assert len(blobs) == 1
    hashes = [json.loads((tmp / f"r{k}" / "manifest.json").read_text())["output_hashes"] for k in range(3)]
    assert hashes[0] == hashes[1] == hashes[2]


def test_check_passes_then_catches_tampering(t6_files, capsys):
    tmp, cfg, prof = t6_files
    out = tmp / "p"
    plan(cfg, prof, out)
    args = ["check", cfg, "--profile", prof, "--plan", str(out)]
    assert cli.main(args) == cli.EXIT_OK
    sol = read_plan(out / "sizing.csv", out / "dispatch.csv")
    rows = (out / "dispatch.csv").read_text().splitlines()
    cells = rows[2].split(",")
    cells[4] = repr(float(sol.p_dchg[0, 0, 1]) + 0.3)
    rows[2] = ",".join(cells)
    write_rows(out / "dispatch.csv", [r.split(",") for r in rows])
    capsys.readouterr()
    assert cli.main(args) == cli.EXIT_CHECK
    assert "power_balance[1,1,2]: 0.3" in capsys.readouterr().out


def test_taper_off_and_fixed_sizes(t6_files, capsys):
    tmp, cfg, prof = t6_files
    assert plan(cfg, prof, tmp / "p", "--taper", "off", "--fix-bess", "0") == 0
    assert "shed 4.5" in capsys.readouterr().out
    assert plan(cfg, prof, tmp / "q", "--fix-bess", "99") == cli.EXIT_CONFIG


def test_config_errors_exit_2(tmp_path, t6_files):
    _, cfg, prof = t6_files
    assert cli.main(["plan", str(tmp_path / "missing.cfg")]) == cli.EXIT_CONFIG
    bad = tmp_path / "bad.cfg"
    bad.write_text("soc_min = 0.9\nsoc_max = 0.2\n")
    assert cli.main(["plan", str(bad)]) == cli.EXIT_CONFIG
    assert plan(cfg, prof, tmp_path / "x", "--years", "3") == cli.EXIT_CONFIG


def test_env_overrides_and_precedence(t6_files, monkeypatch):
    tmp, cfg, prof = t6_files
    monkeypatch.setenv(cli.ENV_NODE_LIMIT, "1")
    monkeypatch.setenv(cli.ENV_GAP, "0.25")
    plan(cfg, prof, tmp / "a")
    opts = json.loads((tmp / "a" / "manifest.json").read_text())["solver_options"]
    assert opts["node_limit"] == 1 and opts["gap_tol"] == 0.25
    plan(cfg, prof, tmp / "b", "--gap", "0", "--node-limit", "50")
    opts = json.loads((tmp / "b" / "manifest.json").read_text())["solver_options"]
    assert opts["node_limit"] == 50 and opts["gap_tol"] == 0.0
    monkeypatch.setenv(cli.ENV_TIME_LIMIT, "soon")
    assert plan(cfg, prof, tmp / "c") == cli.EXIT_CONFIG


def test_node_limit_status_is_not_optimal(t6_files, capsys):
    tmp, cfg, prof = t6_files
    code = plan(cfg, prof, tmp / "p", "--node-limit", "1")
    out = capsys.readouterr().out
    if code == 0:
        assert "status optimal" in out or "status feasible(" in out
        sizing = (tmp / "p" / "sizing.csv").read_text()
        assert ("optimal" in sizing) == ("status optimal" in out)
    else:
        assert code == cli.EXIT_INFEASIBLE


def test_mps_bridge_round_trip(t6_files, capsys):
    tmp, cfg, prof = t6_files
    out = tmp / "bridge"
    assert plan(cfg, prof, out, "--solver", "mps-bridge") == 0
    assert (out / "model.mps").exists() and (out / "model.mps.names").exists()
    # a zero vector is not a plan
    (tmp / "zero.sol").write_text("S_pv 0\n")
    assert plan(cfg, prof, out, "--solver", "mps-bridge", "--solution", str(tmp / "zero.sol")) == cli.EXIT_CHECK
    # a real solution, written by the embedded solver in the documented format
    from taperplan.milp import read_mps, read_name_map, solve_milp, write_solution

    milp = read_mps(out / "model.mps", read_name_map(out / "model.mps.names"))
    write_solution(tmp / "good.sol", milp, solve_milp(milp).x)
    capsys.readouterr()
    assert plan(cfg, prof, out, "--solver", "mps-bridge", "--solution", str(tmp / "good.sol")) == 0
    assert "status external" in capsys.readouterr().out
    assert cli.main(["check", cfg, "--profile", prof, "--plan", str(out)]) == 0


def test_mps_bridge_needs_export_first(t6_files):
    tmp, cfg, prof = t6_files
    (tmp / "s.sol").write_text("S_pv 1\n")
    assert plan(cfg, prof, tmp / "fresh", "--solver", "mps-bridge", "--solution", str(tmp / "s.sol")) == cli.EXIT_CONFIG


def test_highs_solver_matches(t6_files, capsys):
    pytest.importorskip("highspy")
    tmp, cfg, prof = t6_files
    assert plan(cfg, prof, tmp / "h", "--solver", "highs") == 0
    out = capsys.readouterr().out
    line = next(ln for ln in out.splitlines() if ln.startswith("objective"))
    assert float(line.split()[1]) == pytest.approx(986.1855296135072, rel=1e-7)


def test_export_mps(t6_files, capsys):
    tmp, cfg, prof = t6_files
    dest = tmp / "m" / "plan.mps"
    assert cli.main(["export-mps", cfg, "--profile", prof, "--out", str(dest)]) == 0
    assert dest.read_text().startswith("NAME")
    assert (tmp / "m" / "manifest.json").exists()


def test_simulate_cell(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("cell_r_s = 0.001\ncell_dt = 1.0\n")
    out = tmp_path / "cell"
    assert cli.main(["simulate-cell", str(cfg), "--out", str(out)]) == 0
    assert {p.name for p in out.iterdir()} == {"trace_constant.csv", "trace_taper.csv", "summary.csv", "manifest.json"}
    text = capsys.readouterr().out
    assert "time 3600 s" in text
    assert cli.main(["simulate-cell", str(cfg), "--dt", "20", "--out", str(out)]) == cli.EXIT_SIM
    assert cli.main(["simulate-cell", str(cfg), "--rs", "-1", "--out", str(out)]) == cli.EXIT_CONFIG


def test_simulation_stall_exit_3(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("cell_taper = [(0.0, 1.0), (0.5, 0.0)]\n")
    assert cli.main(["simulate-cell", str(cfg), "--policy", "taper", "--out", str(tmp_path / "o")]) == cli.EXIT_SIM


def test_cases_dependency_exit(t6_files, monkeypatch):
    from taperplan import scenario

    tmp, cfg, prof = t6_files

    def fail(*a, **kw):
        raise scenario.PlanFailure("limit", "no feasible plan (limit)")

    monkeypatch.setattr(scenario, "solve_plan", fail)
    assert cli.main(["cases", cfg, "--profile", prof, "--out", str(tmp / "c")]) == cli.EXIT_DEPENDENCY


def test_cases_on_small_instance(t6_files):
    tmp, cfg, prof = t6_files
    assert cli.main(["cases", cfg, "--profile", prof, "--out", str(tmp / "c")]) == 0
    report = (tmp / "c" / "report.csv").read_text().splitlines()
    assert report[0] == "metric,Case 1,Case 2,Case 3,Case 4"
    assert len(report) == 10
    for k in range(1, 5):
        assert (tmp / "c" / f"case{k}" / "dispatch.csv").exists()


def test_default_config_parses(tmp_path, capsys):
    assert cli.main(["default-config"]) == 0
    text = capsys.readouterr().out
    from taperplan.io import parse_config

    assert parse_config(text).planning == RunConfig().planning
    assert cli.main(["default-config", "--out", str(tmp_path / "d.cfg")]) == 0
    assert (tmp_path / "d.cfg").read_text() == text


def test_dispatch_band_column(t6_files):
    tmp, cfg, prof = t6_files
    plan(cfg, prof, tmp / "p")
    sol = read_plan(tmp / "p" / "sizing.csv", tmp / "p" / "dispatch.csv")
    charging = sol.u_chg > 0.5
    assert np.all(sol.band[charging] >= 0) and np.all(sol.band[~charging] == -1)


def test_oversize_model_exit_2(t6_files, monkeypatch, capsys):
    from taperplan.milp import simplex

    tmp, cfg, prof = t6_files
    monkeypatch.setattr(simplex, "MAX_DENSE_ENTRIES", 10)
    assert plan(cfg, prof, tmp / "p") == cli.EXIT_CONFIG
    assert "--solver highs" in capsys.readouterr().err

"""The ten acceptance criteria, one test each (criterion 6 at two scales).

Every test records ``(passed, detail)`` in ``conftest.ACCEPTANCE`` before
asserting, and the terminal summary prints one line per criterion.
"""

import time

import numpy as np
import pytest

import conftest
from conftest import T6_LOAD, T6_PV, random_milp, t6_config
from taperplan import cli
from taperplan.cellsim import ConstantC, PackSpec, Tapered, simulate_charge
from taperplan.domain import PlanningConfig, Profiles, TaperSchedule, desk_scale
from taperplan.io import RunConfig, config_text, write_profile_csv
from taperplan.milp import SolveOptions, brute_force, read_mps, solve_milp, write_mps
from taperplan.planmodel import build_model, check_solution, extract_solution
from taperplan.scenario import run_cases, solve_plan, synthetic_profile


def record(n, ok, detail):
    prev = conftest.ACCEPTANCE.get(n)
    if prev is not None:
        ok = ok and prev[0]
        detail = f"{prev[1]}; {detail}"
    conftest.ACCEPTANCE[n] = (bool(ok), detail)
    assert ok, detail


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def t6_instance(sched=True):
    cfg = t6_config()
    prof = Profiles.from_days([T6_LOAD], [T6_PV])
    return cfg, prof, TaperSchedule.default(cfg.soc_min, cfg.soc_max) if sched else None


def test_criterion_01_charge_times():
    # compile outside the timed window
    simulate_charge(PackSpec(), ConstantC(1.0))
    t0 = time.perf_counter()
    const = simulate_charge(PackSpec(r_s=0.001), ConstantC(1.0), dt=1.0)
    taper = simulate_charge(PackSpec(r_s=0.001), Tapered(), dt=1.0)
    runtime = time.perf_counter() - t0
    ok = (
        const.terminal_time == 3600.0
        and abs(taper.terminal_time - 6300.0) <= 2 * 1.0
        and abs(6263.0 - taper.terminal_time) <= 0.05 * taper.terminal_time
        and runtime < 1.0
    )
    record(1, ok, f"constant {const.terminal_time:g} s, tapered {taper.terminal_time:g} s, runtime {runtime:.3f} s")


def test_criterion_02_efficiencies():
    c2 = simulate_charge(PackSpec(r_s=0.001), ConstantC(1.0))
    c5 = simulate_charge(PackSpec(r_s=0.01), Tapered())
    t1 = simulate_charge(PackSpec(r_s=0.001), Tapered())
    reduction = (c2.e_loss - t1.e_loss) / c2.e_loss
    ok = abs(c2.eta_chg - 99.93) <= 0.05 and abs(c5.eta_chg - 99.48) <= 0.2 and 0.10 <= reduction <= 0.16
    record(2, ok, f"eta const 1 mOhm {c2.eta_chg:.4f} %, taper 10 mOhm {c5.eta_chg:.4f} %, "
                  f"loss reduction {100 * reduction:.2f} %")


def test_criterion_03_loss_linearity():
    worst = 0.0
    for pol in (ConstantC(1.0), Tapered()):
        for r in (0.0005, 0.001, 0.003):
            a = simulate_charge(PackSpec(r_s=r), pol)
            b = simulate_charge(PackSpec(r_s=10 * r), pol)
            worst = max(worst, abs(b.e_loss / a.e_loss - 10.0) / 10.0)
    record(3, worst <= 0.01, f"max deviation from 10x: {100 * worst:.3f} %")


def test_criterion_04_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    worst = 0.0
    mismatches = []
    for k in range(100):
        m = random_milp(rng, nmax=30, kmax=12)
        assert m.n_integral <= 12 and m.n_cols <= 30
        a = solve_milp(m, gap_tol=0.0)
        b = brute_force(m)
        if a.status != b.status:
            mismatches.append(k)
        elif a.status == "optimal":
            d = abs(a.objective - b.objective) / max(abs(b.objective), 1e-9)
            worst = max(worst, d)
            if d > 1e-6:
                mismatches.append(k)
    cfg, prof, sched = t6_instance()
    m, _ = build_model(cfg, prof, sched)
    a, b = solve_milp(m, gap_tol=0.0), brute_force(m)
    t6_dev = rel(a.objective, b.objective)
    free = int((m.integrality & (m.col_lower < m.col_upper)).sum())
    runtime = time.perf_counter() - t0
    ok = not mismatches and t6_dev <= 1e-6 and runtime < 60.0
    record(4, ok, f"100 random MILPs, worst rel dev {worst:.1e}, mismatches {mismatches}; "
                  f"T=6 {a.objective:.6f} vs {b.objective:.6f} ({free} free of {m.n_integral} binaries); {runtime:.1f} s")


def test_criterion_05_single_band_degeneracy():
    cfg, prof, _ = t6_instance(sched=False)
    base = solve_plan(cfg, prof, None)
    single = solve_plan(cfg, prof, TaperSchedule.single_band(cfg.soc_min, cfg.soc_max))
    d = rel(single.objective, base.objective)
    record(5, d <= 1e-9, f"baseline {base.objective!r}, single band {single.objective!r}, rel dev {d:.1e}")


SHED_TOL = 1e-6  # MWh, the audit tolerance; solvers leave round-off behind


def orderings(results):
    c1, c2, c3, c4 = results
    checks = {
        "obj1>=obj2": c1.objective >= c2.objective,
        "bess1>=bess2": c1.s_bess >= c2.s_bess,
        "shed1-3=0": max(c1.load_shed, c2.load_shed, c3.load_shed) <= SHED_TOL,
        "obj3=obj1": rel(c3.objective, c1.objective) <= 1e-6,
        "shed4>0": c4.load_shed > SHED_TOL,
        "statuses": all(r.status == "optimal" for r in results),
    }
    failed = [k for k, v in checks.items() if not v]
    summary = (f"obj {c1.objective:.6g}/{c2.objective:.6g}/{c3.objective:.6g}/{c4.objective:.6g}, "
               f"bess {c1.s_bess:.4g}/{c2.s_bess:.4g}, shed4 {c4.load_shed:.4g} MWh, "
               f"statuses {'/'.join(r.status for r in results)}")
    return not failed, summary + (f", failed {failed}" if failed else "")


def test_criterion_06_case_orderings_desk_scale():
    cfg = desk_scale(PlanningConfig(), 2)
    prof = synthetic_profile(years=2)
    t0 = time.perf_counter()
    res = run_cases(cfg, prof, TaperSchedule.default(cfg.soc_min, cfg.soc_max), SolveOptions(gap_tol=0.0))
    ok, detail = orderings(res)
    record(6, ok, f"Y=2 embedded ({time.perf_counter() - t0:.0f} s): {detail}")


def test_criterion_06_case_orderings_full_horizon():
    # the dense embedded solver cannot hold the 25-year model, so it goes through the HiGHS file bridge
    pytest.importorskip("highspy")
    cfg = PlanningConfig()
    prof = synthetic_profile(years=cfg.y_mg)
    t0 = time.perf_counter()
    res = run_cases(cfg, prof, TaperSchedule.default(cfg.soc_min, cfg.soc_max), SolveOptions(gap_tol=0.0),
                    solver="highs")
    ok, detail = orderings(res)
    record(6, ok, f"Y=25 highs bridge ({time.perf_counter() - t0:.0f} s): {detail}")


def test_criterion_07_total_load():
    cfg = PlanningConfig()
    prof = synthetic_profile(years=cfg.y_mg)
    total = cfg.alpha * float(prof.load.sum())
    record(7, total == 164250.0, f"total load {total!r} MWh (18 MWh/day x {cfg.alpha:g} x {cfg.y_mg})")


def test_criterion_08_solution_audit():
    cfg, prof, sched = t6_instance()
    rng = np.random.default_rng(8)
    audited = 0
    failures = []
    variants = [
        (cfg, sched),
        (cfg, None),
        (cfg.with_(band_reference="start_of_interval"), sched),
        (cfg.with_(init_soc_mode="free"), sched),
        (cfg.with_(terminal_soc_constraint=True), sched),
    ]
    for k in range(6):
        load = rng.uniform(0.2, 1.5, 6)
        pv = np.clip(rng.uniform(-0.5, 1.0, 6), 0, 1)
        variants.append((cfg, sched, Profiles.from_days([load], [pv])))
    for v in variants:
        c, s = v[0], v[1]
        p = v[2] if len(v) > 2 else prof
        for options in (dict(), dict(strengthen=True), dict(hull_cuts=True)):
            m, cat = build_model(c, p, s, **options)
            r = solve_milp(m)
            sol = extract_solution(r.x, cat, r.objective)
            bad = check_solution(c, p, s, sol, tol=1e-6)
            audited += 1
            if bad:
                failures.append(str(bad[0]))
            if s is not None:
                # the nonlinear rules, spelled out on the returned plan
                on = sol.u_chg > 0.5
                soc = sol.e_bess / sol.s_bess if sol.s_bess > 0 else np.zeros(sol.shape)
                lo = np.array([b.lower for b in s.bands])[sol.band]
                hi = np.array([b.upper for b in s.bands])[sol.band]
                beta = np.array(s.beta)[sol.band]
                if c.band_reference == "end_of_interval" and sol.s_bess > 0:
                    slack = 1e-6 / sol.s_bess
                    if np.any(on & ((soc < lo - slack) | (soc > hi + slack))):
                        failures.append("band membership")
                if np.any(on & (sol.p_chg > beta * sol.s_bess / c.t_chg + 1e-6)):
                    failures.append("taper cap")
    record(8, not failures, f"{audited} solver plans audited at 1e-6, failures {failures[:3]}")


def test_criterion_09_mps_round_trip():
    cfg, prof, sched = t6_instance()
    m, _ = build_model(cfg, prof, sched)
    data, names = write_mps(m)
    back = read_mps(data, names)
    a, b = solve_milp(m).objective, solve_milp(back).objective
    d = rel(b, a)
    record(9, d <= 1e-9, f"{a!r} -> {b!r}, rel dev {d:.1e}")


def test_criterion_10_determinism(tmp_path):
    cfg_path = tmp_path / "t6.cfg"
    cfg_path.write_text(config_text(RunConfig(planning=t6_config())))
    prof_path = tmp_path / "t6.csv"
    write_profile_csv(prof_path, Profiles.from_days([T6_LOAD], [T6_PV]))
    blobs = []
    for k in range(3):
        out = tmp_path / f"run{k}"
        code = cli.main(["plan", str(cfg_path), "--profile", str(prof_path), "--out", str(out)])
        assert code == 0
        blobs.append((out / "dispatch.csv").read_bytes())
    record(10, len(set(blobs)) == 1, f"3 runs, {len(set(blobs))} distinct dispatch.csv ({len(blobs[0])} bytes)")

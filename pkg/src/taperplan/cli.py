"""Command-line entry point: ``taperplan <command> ...``.

Exit codes: 0 success, 1 check failure, 2 configuration error (including a
model too large for the embedded solver), 3 simulation error, 4 infeasible
(or no plan found), 5 a case another case depends on failed.

Solver options resolve in the order flag, environment, config file. The
environment names are ``TAPERPLAN_TIME_LIMIT`` (seconds),
``TAPERPLAN_GAP`` (relative gap) and ``TAPERPLAN_NODE_LIMIT``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .cellsim import PackSpec, SimulationError, simulate_charge, sweep_resistance, write_summary
from .domain import ConfigError, desk_scale
from .io import RunConfig, config_text, load_config, read_plan, read_profile_csv, write_plan
from .milp import ModelTooLargeError, MpsError, SolveOptions, bridge
from .planmodel import build_model, check_solution, extract_solution, fix_sizes
from .scenario import (
    AuditError,
    DependencyError,
    PlanFailure,
    run_cases,
    solve_plan,
    synthetic_profile,
    write_report,
)

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_CONFIG = 2
EXIT_SIM = 3
EXIT_INFEASIBLE = 4
EXIT_DEPENDENCY = 5

ENV_TIME_LIMIT = "TAPERPLAN_TIME_LIMIT"
ENV_GAP = "TAPERPLAN_GAP"
ENV_NODE_LIMIT = "TAPERPLAN_NODE_LIMIT"


def _err(msg: str) -> None:
    print(f"taperplan: {msg}", file=sys.stderr)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """What ran, on which inputs, and what it wrote."""

    command: str
    config_path: str | None
    input_hashes: dict[str, str]
    solver_options: dict
    output_dir: str
    output_hashes: dict[str, str] = field(default_factory=dict)
    wall_time_s: float = 0.0
    versions: dict[str, str] = field(default_factory=dict)

    def write(self, directory) -> Path:
        path = Path(directory) / "manifest.json"
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".manifest.")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
        return path


def _versions() -> dict[str, str]:
    out = {"taperplan": __version__, "numpy": np.__version__, "python": platform.python_version()}
    try:
        import numba

        out["numba"] = numba.__version__
    except ImportError:
        pass
    return out


def _manifest(command, args, inputs, options, out_dir, outputs, t0) -> None:
    cfg_path = str(Path(args.config).resolve()) if getattr(args, "config", None) else None
    m = RunManifest(
        command=command,
        config_path=cfg_path,
        input_hashes={str(p): _sha256(p) for p in inputs},
        solver_options=options,
        output_dir=str(Path(out_dir).resolve()),
        output_hashes={Path(p).name: _sha256(p) for p in outputs},
        wall_time_s=time.perf_counter() - t0,
        versions=_versions(),
    )
    m.write(out_dir)


def _env_number(name, cast):
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return None
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f"environment variable {name}={raw!r} is not a valid number") from None


def _solve_options(args, run: RunConfig) -> SolveOptions:
    tl = args.time_limit if args.time_limit is not None else _env_number(ENV_TIME_LIMIT, float)
    gap = args.gap if args.gap is not None else _env_number(ENV_GAP, float)
    nl = getattr(args, "node_limit", None)
    nl = nl if nl is not None else _env_number(ENV_NODE_LIMIT, int)
    try:
        return SolveOptions(
            gap_tol=gap if gap is not None else run.solver.gap_tol,
            time_limit_s=tl if tl is not None else run.solver.time_limit_s,
            node_limit=nl if nl is not None else run.solver.node_limit,
        )
    except ValueError as exc:
        raise ConfigError(f"invalid solver options: {exc}") from None


def _options_dict(opts: SolveOptions) -> dict:
    return {"gap_tol": opts.gap_tol, "time_limit_s": opts.time_limit_s, "node_limit": opts.node_limit}


def _planning_inputs(args, run: RunConfig):
    years = args.years if args.years is not None else run.years
    if not 1 <= years <= run.planning.y_mg:
        raise ConfigError(f"--years must lie in [1, y_mg={run.planning.y_mg}], got {years}")
    cfg = run.planning if years == run.planning.y_mg else desk_scale(run.planning, years)
    inputs = [args.config]
    if getattr(args, "profile", None):
        prof = read_profile_csv(args.profile, years=years)
        inputs.append(args.profile)
    else:
        prof = synthetic_profile(years=years)
    return cfg, prof, inputs


def _outdir(path) -> Path:
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    return d


# ------------------------------------------------------------------ commands


def cmd_simulate_cell(args) -> int:
    t0 = time.perf_counter()
    run = load_config(args.config)
    c = run.cell
    pack = c.pack
    if args.rs is not None:
        try:
            pack = PackSpec(pack.capacity_ah, pack.n_series, pack.v_cell_nominal, args.rs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    dt = args.dt if args.dt is not None else c.dt
    named = {"constant": c.constant, "taper": c.taper}
    chosen = ["constant", "taper"] if args.policy == "both" else [args.policy]
    policies = [named[k] for k in chosen]
    out = _outdir(args.out)
    written = []
    for key, pol in zip(chosen, policies):
        tr = simulate_charge(pack, pol, c.soc0, c.soc_target, dt)
        path = out / f"trace_{key}.csv"
        tr.to_csv(path)
        written.append(path)
    rows = sweep_resistance(pack, [pack.r_s], policies, c.soc0, c.soc_target, dt)
    summary = out / "summary.csv"
    write_summary(rows, summary)
    written.append(summary)
    for r in rows:
        print(f"{r.policy}: time {r.terminal_time:g} s, delivered {r.e_delivered:.6g} kWh, "
              f"loss {r.e_loss:.6g} kWh, eta {r.eta_chg:.4f} %")
    _manifest("simulate-cell", args, [args.config], {"dt": dt, "r_s": pack.r_s}, out, written, t0)
    return EXIT_OK


def cmd_plan(args) -> int:
    t0 = time.perf_counter()
    run = load_config(args.config)
    cfg, prof, inputs = _planning_inputs(args, run)
    sched = run.schedule if args.taper == "on" else None
    opts = _solve_options(args, run)
    out = _outdir(args.out)

    if args.solver == "mps-bridge":
        milp, cat = build_model(cfg, prof, sched, hull_cuts=sched is not None)
        if args.fix_pv is not None or args.fix_bess is not None:
            milp = fix_sizes(milp, cat, args.fix_pv, args.fix_bess)
        files = bridge.BridgeFiles.in_dir(out)
        if args.solution is None:
            bridge.export_model(milp, files)
            print(f"wrote {files.mps} and {files.names}")
            print("solve externally, write '<column> <value>' lines, then rerun with --solution FILE")
            _manifest("plan", args, inputs, _options_dict(opts), out, [files.mps, files.names], t0)
            return EXIT_OK
        names = files.names if files.names.exists() else None
        if names is None:
            raise ConfigError(f"name map {files.names} not found; export the model first")
        files = bridge.BridgeFiles(files.mps, files.names, Path(args.solution))
        x = bridge.import_solution(milp, files)
        sol = extract_solution(x, cat, milp.objective(x), status="external", gap=np.nan)
        bad = check_solution(cfg, prof, sched, sol, tol=1e-6)
        if bad:
            _err(f"imported solution fails {len(bad)} checks")
            for r in bad[:20]:
                print(r)
            return EXIT_CHECK
        inputs.append(args.solution)
    else:
        try:
            sol = solve_plan(cfg, prof, sched, opts, fix_pv=args.fix_pv, fix_bess=args.fix_bess, solver=args.solver)
        except PlanFailure as exc:
            _err(str(exc))
            if args.fix_pv is not None or args.fix_bess is not None:
                _err("sizes were fixed; with load shedding allowed this usually means a bound is inconsistent")
            return EXIT_INFEASIBLE
        except AuditError as exc:
            _err(str(exc))
            return EXIT_CHECK
    sizing, dispatch = write_plan(out, sol)
    print(f"status {sol.status_label}")
    print(f"objective {sol.objective!r}")
    print(f"s_pv {sol.s_pv!r} MW, s_bess {sol.s_bess!r} MWh, shed {cfg.alpha * float(sol.p_ls.sum())!r} MWh")
    _manifest("plan", args, inputs, _options_dict(opts) | {"solver": args.solver, "taper": args.taper},
              out, [sizing, dispatch], t0)
    return EXIT_OK


def cmd_cases(args) -> int:
    t0 = time.perf_counter()
    run = load_config(args.config)
    cfg, prof, inputs = _planning_inputs(args, run)
    opts = _solve_options(args, run)
    out = _outdir(args.out)
    written = []

    def keep(res):
        print(f"Case {res.case_id}: {res.status}, objective {res.objective!r}, "
              f"s_pv {res.s_pv!r}, s_bess {res.s_bess!r}, shed {res.load_shed!r}")
        d = _outdir(out / f"case{res.case_id}")
        written.extend(write_plan(d, res.solution))

    try:
        results = run_cases(cfg, prof, run.schedule, opts, solver=args.solver, on_result=keep)
    except DependencyError as exc:
        _err(str(exc))
        return EXIT_DEPENDENCY
    except PlanFailure as exc:
        _err(str(exc))
        return EXIT_INFEASIBLE
    except AuditError as exc:
        _err(str(exc))
        return EXIT_CHECK
    written.append(write_report(out / "report.csv", results))
    _manifest("cases", args, inputs, _options_dict(opts) | {"solver": args.solver}, out, written, t0)
    return EXIT_OK


def cmd_export_mps(args) -> int:
    t0 = time.perf_counter()
    run = load_config(args.config)
    cfg, prof, inputs = _planning_inputs(args, run)
    sched = run.schedule if args.taper == "on" else None
    milp, cat = build_model(cfg, prof, sched, hull_cuts=sched is not None)
    if args.fix_pv is not None or args.fix_bess is not None:
        milp = fix_sizes(milp, cat, args.fix_pv, args.fix_bess)
    dest = Path(args.out)
    dest.parent.mkdir(parents=True, exist_ok=True)
    files = bridge.BridgeFiles(dest, dest.with_name(dest.name + ".names"), dest.with_suffix(".sol"))
    bridge.export_model(milp, files)
    print(f"{milp.n_rows} rows, {milp.n_cols} columns ({milp.n_integral} integral) -> {dest}")
    _manifest("export-mps", args, inputs, {"taper": args.taper}, dest.parent, [files.mps, files.names], t0)
    return EXIT_OK


def cmd_check(args) -> int:
    run = load_config(args.config)
    cfg, prof, _ = _planning_inputs(args, run)
    sched = run.schedule if args.taper == "on" else None
    sizing = Path(args.plan) / "sizing.csv" if args.sizing is None else Path(args.sizing)
    dispatch = Path(args.plan) / "dispatch.csv" if args.dispatch is None else Path(args.dispatch)
    sol = read_plan(sizing, dispatch)
    if sol.shape != prof.shape:
        raise ConfigError(f"plan covers {sol.shape} steps but the profile has {prof.shape}")
    bad = check_solution(cfg, prof, sched, sol, tol=args.tol)
    if not bad:
        print("ok: no violations")
        return EXIT_OK
    print(f"{len(bad)} violations")
    for r in bad:
        print(r)
    return EXIT_CHECK


def cmd_default_config(args) -> int:
    text = config_text(RunConfig())
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -------------------------------------------------------------------- parser


def _add_profile_args(p):
    p.add_argument("config", help="key-value configuration file")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--profile", help="CSV with hour,load_mw,pv_cf (optional day column)")
    g.add_argument("--synthetic", action="store_true", help="use the built-in representative day (default)")
    p.add_argument("--years", type=int, help="planning years to model (alpha is rescaled to y_mg)")


def _add_model_args(p):
    p.add_argument("--taper", choices=("on", "off"), default="on", help="SOC-tapered charging limits")
    p.add_argument("--fix-pv", type=float, help="fix the PV size (MW)")
    p.add_argument("--fix-bess", type=float, help="fix the BESS size (MWh)")


def _add_solver_args(p):
    p.add_argument("--time-limit", type=float, help=f"seconds (env {ENV_TIME_LIMIT}; default 3600)")
    p.add_argument("--gap", type=float, help=f"relative MIP gap (env {ENV_GAP}; default 0)")
    p.add_argument("--node-limit", type=int, help=f"branch-and-bound nodes (env {ENV_NODE_LIMIT})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taperplan",
        description="PV/BESS sizing with SOC-tapered charging, and a pack charging simulator.",
        epilog="exit codes: 0 ok, 1 check failed, 2 config error, 3 simulation error, "
        "4 infeasible, 5 dependency failed",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-cell", help="charge a cell pack under constant or tapered current")
    p.add_argument("config")
    p.add_argument("--policy", choices=("constant", "taper", "both"), default="both")
    p.add_argument("--rs", type=float, help="pack series resistance in ohm (overrides cell_r_s)")
    p.add_argument("--dt", type=float, help="time step in seconds (at most 10)")
    p.add_argument("--out", default="out/cell")
    p.set_defaults(func=cmd_simulate_cell)

    p = sub.add_parser("plan", help="size and dispatch one planning instance")
    _add_profile_args(p)
    _add_model_args(p)
    _add_solver_args(p)
    p.add_argument("--solver", choices=("embedded", "mps-bridge", "highs"), default="embedded",
                   help="mps-bridge writes the model, then imports --solution on a second run")
    p.add_argument("--solution", help="external solution file to import (mps-bridge)")
    p.add_argument("--out", default="out/plan")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("cases", help="run the four case studies and write report.csv")
    _add_profile_args(p)
    _add_solver_args(p)
    p.add_argument("--solver", choices=("embedded", "highs"), default="embedded")
    p.add_argument("--out", default="out/cases")
    p.set_defaults(func=cmd_cases)

    p = sub.add_parser("export-mps", help="write the planning model in fixed MPS format")
    _add_profile_args(p)
    _add_model_args(p)
    p.add_argument("--out", default="out/model.mps")
    p.set_defaults(func=cmd_export_mps)

    p = sub.add_parser("check", help="audit a plan against the model statements")
    _add_profile_args(p)
    p.add_argument("--taper", choices=("on", "off"), default="on")
    p.add_argument("--plan", default="out/plan", help="directory holding sizing.csv and dispatch.csv")
    p.add_argument("--sizing")
    p.add_argument("--dispatch")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("default-config", help="print the default configuration file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_default_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except SimulationError as exc:
        _err(str(exc))
        return EXIT_SIM
    except MpsError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except ImportError as exc:
        _err(f"{exc}; install the optional solver package to use this option")
        return EXIT_CONFIG
    except ModelTooLargeError as exc:
        _err(f"{exc} (try --years 2, --solver highs or export-mps)")
        return EXIT_CONFIG
    except ValueError as exc:
        # argument values the model rejects, such as a fixed size above its bound
        _err(str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

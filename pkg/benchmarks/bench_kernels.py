"""Time the compiled and pure-numpy kernels side by side.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--years 1]

Two kernels are measured: the charging loop of the pack simulator and the
simplex pivot kernel on the LP relaxation of a planning model. Each is run
once untimed (so JIT compilation is excluded) and then ``--repeat`` times;
the table shows the best wall time per backend and the speed-up.
"""

import argparse
import time

import numpy as np

from taperplan.cellsim import PackSpec, Tapered, simulate_charge
from taperplan.domain import PlanningConfig, TaperSchedule, desk_scale
from taperplan.milp import solve_lp
from taperplan.planmodel import build_model
from taperplan.scenario import synthetic_profile


def best_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cell_case(backend):
    pack = PackSpec(r_s=0.01)
    return lambda: simulate_charge(pack, Tapered(), dt=0.1, backend=backend)


def lp_case(backend, years):
    cfg = desk_scale(PlanningConfig(init_soc_mode="fixed_fraction"), years)
    sched = TaperSchedule.default(cfg.soc_min, cfg.soc_max)
    milp, _ = build_model(cfg, synthetic_profile(years=years), sched, hull_cuts=True)
    return lambda: solve_lp(milp, backend=backend)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--years", type=int, default=1, help="planning years in the LP benchmark")
    args = ap.parse_args()

    cases = [
        ("cell charge, dt=0.1 s", cell_case),
        (f"planning LP, Y={args.years}", lambda b: lp_case(b, args.years)),
    ]
    print(f"{'kernel':<24} {'numba [s]':>10} {'numpy [s]':>10} {'speed-up':>9}")
    for label, make in cases:
        t_nb = best_time(make("numba"), args.repeat)
        t_np = best_time(make("numpy"), args.repeat)
        print(f"{label:<24} {t_nb:>10.4f} {t_np:>10.4f} {t_np / t_nb:>8.1f}x")

    # both backends must agree on the answers they are timed on
    a = make("numba")()
    b = make("numpy")()
    assert np.isclose(a.objective, b.objective, rtol=1e-9), (a.objective, b.objective)


if __name__ == "__main__":
    main()

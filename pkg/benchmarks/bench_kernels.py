"""Compare the numba-compiled integrator with the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ncpt import _kernels, dynamics as dyn, scan as S
from ncpt.nuclear import preset

CASES = {
    # name: (preset, laser, geometry, ratio, pump intensity W/cm^2, delay in pulse widths)
    "gd154-xfelo-stirap": ("gd154", "xfelo", "copro", 0.90, 1.5e19, 1.0),
    "re185-sxfel-pi": ("re185", "sxfel", "crossed", 0.02, 5.6e25, -0.4),
    "re185-sxfel-strong": ("re185", "sxfel", "crossed", 0.02, 1e28, 1.0),
}


def problem(case):
    key, laser, geometry, ratio, I_p, delay_w = CASES[case]
    ctx = S.make_context(preset(key), laser, geometry, ratio)
    drives = ctx.drives(I_p, delay_w * ctx.pulse_width)
    p = dyn._param_vector(drives, ctx.rates, 1.0)
    t_eval = np.linspace(*dyn.default_span(drives), 2)
    h_max = 0.25 * min(drives.pump.width, drives.stokes.width)
    return dyn.initial_state(), t_eval, p, h_max


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return min(times), result


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    start = time.perf_counter()
    _kernels.integrate_numba(*problem("gd154-xfelo-stirap")[:3], 1e-9, 1e-12, np.inf, 0.0, 10**7)
    print(f"numba warm-up (compile or cache load): {time.perf_counter() - start:.2f} s")
    print(f"{'case':22s} {'steps':>8s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s} {'max |diff|':>11s}")
    for case in CASES:
        y0, t_eval, p, h_max = problem(case)
        args_ = (y0, t_eval, p, 1e-9, 1e-12, h_max, 0.0, 10**7)
        t_nb, r_nb = best_of(lambda: _kernels.integrate_numba(*args_), args.repeat)
        t_np, r_np = best_of(lambda: _kernels.integrate_numpy(*args_), max(1, args.repeat // 5))
        diff = float(np.abs(r_nb[0] - r_np[0]).max())
        print(f"{case:22s} {r_nb[3]:8d} {1e3 * t_nb:10.2f} {1e3 * t_np:10.1f} {t_np / t_nb:8.0f} {diff:11.1e}")


if __name__ == "__main__":
    main()

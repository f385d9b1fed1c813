"""Time the compiled and numpy versions of the hot kernels side by side.

    python benchmarks/bench_kernels.py [--repeat 5]

Both paths are called directly, so the SUBLAP_NO_NUMBA flag is not needed
here; the script also checks that the two paths agree.
"""
import argparse
import time

import numpy as np

from sublap import kernels, specfun
from sublap._accel import HAVE_NUMBA


def best_of(fn, repeat):
    fn()  # warm up (and compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--points", type=int, default=20000)
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    w = rng.uniform(0, 30, args.points)
    v = rng.uniform(-8, 8, args.points)
    x = np.linspace(-6, 6, 401)
    y = np.linspace(-12, 12, 4801)
    uy = np.exp(-0.5 * y * y)
    bx = rng.uniform(0, 200, args.points)

    cases = [
        ("heis_p1", lambda: kernels.heis_p1_numba(w, v), lambda: kernels.heis_p1_numpy(w, v)),
        ("gauss_lattice_sum",
         lambda: kernels._gauss_sum_loop(x, y, uy, 0.3, 0.005),
         lambda: 0.005 / np.sqrt(4 * np.pi * 0.3) * (np.exp(-(x[:, None] - y[None, :]) ** 2 / 1.2) @ uy)),
        ("bessel_i_scaled nu=-0.25",
         lambda: specfun._scaled_array_nb(-0.25, bx), lambda: specfun._scaled_array_np(-0.25, bx)),
    ]
    print(f"numba available: {HAVE_NUMBA}")
    print(f"{'kernel':28s} {'numba [ms]':>12s} {'numpy [ms]':>12s} {'speedup':>9s} {'max |diff|':>11s}")
    for name, fast, slow in cases:
        diff = float(np.max(np.abs(np.asarray(fast()) - np.asarray(slow()))))
        tf = best_of(fast, args.repeat) if HAVE_NUMBA else float("nan")
        ts = best_of(slow, args.repeat)
        print(f"{name:28s} {1e3 * tf:12.2f} {1e3 * ts:12.2f} {ts / tf:9.1f} {diff:11.2e}")


if __name__ == "__main__":
    main()

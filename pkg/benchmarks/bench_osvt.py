"""Compare the compiled and pure-NumPy OSVT kernels.

Usage: python benchmarks/bench_osvt.py [--repeat N] [--trials N]

Times one full masked recovery (iterate to convergence) on the matrix
shapes the experiment produces, then one Monte Carlo trial end to end.
"""
import argparse
import time
import timeit

import numpy as np

from commrec import osvt
from commrec.osvt import OsvtConfig, normalize, optimal_threshold

# (label, rows, cols): Page tiles for 7-sensor clusters at W=6 and W=15,
# the raw 48 x 7 tile used by baseline2, and the completion test matrix
SHAPES = [("page 8x42", 8, 42), ("page 8x105", 8, 105), ("raw 48x7", 48, 7), ("24x48", 24, 48)]


def make_case(m, n, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(m * n)
    X = 1.0 + 0.02 * np.sin(2 * np.pi * t / 48).reshape(m, n) + rng.normal(0, 1e-3, (m, n))
    obs = rng.random((m, n)) > 0.05
    Y, _, _ = normalize(X, obs)
    return Y, obs


def time_kernel(kernel, Y, obs, repeat):
    cfg = OsvtConfig()
    th = optimal_threshold(*Y.shape)

    def call():
        return kernel.masked_iterate(Y, obs, th, 0, cfg.max_iters, cfg.rel_tol, cfg.min_rank_floor)

    iters = call()[2]
    best = min(timeit.repeat(call, number=1, repeat=repeat))
    return best, iters


def time_trials(trials):
    from commrec.pipeline import RunConfig, run_experiment

    out = {}
    for backend in ("python", "cython"):
        if backend == "cython" and osvt.BACKEND != "cython":
            continue
        saved = osvt._kernel
        osvt._kernel = osvt.get_kernel(backend)
        try:
            start = time.perf_counter()
            run_experiment(RunConfig(trials=trials), write=False)
            out[backend] = (time.perf_counter() - start) / trials
        finally:
            osvt._kernel = saved
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--trials", type=int, default=5)
    args = ap.parse_args()

    if osvt.BACKEND != "cython":
        print("compiled kernel not built; only the NumPy kernel is timed")
    print(f"{'shape':<12}{'iters':>6}{'numpy us':>12}{'cython us':>12}{'speedup':>9}")
    for label, m, n in SHAPES:
        Y, obs = make_case(m, n)
        py, iters = time_kernel(osvt.get_kernel("python"), Y, obs, args.repeat)
        line = f"{label:<12}{iters:>6}{py * 1e6:>12.0f}"
        if osvt.BACKEND == "cython":
            cy, _ = time_kernel(osvt.get_kernel("cython"), Y, obs, args.repeat)
            line += f"{cy * 1e6:>12.0f}{py / cy:>8.1f}x"
        print(line)

    per_trial = time_trials(args.trials)
    print()
    for backend, sec in per_trial.items():
        print(f"one Monte Carlo trial, {backend} kernel: {sec:.3f} s")


if __name__ == "__main__":
    main()

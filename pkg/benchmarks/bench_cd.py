"""Compiled vs pure-Python coordinate-descent kernel.

    python3 benchmarks/bench_cd.py [--n 50] [--p 100] [--repeat 3]

Times a warm-started Lasso path on one row regression drawn from the
normalised-adjacency model, once per kernel, and checks both reach the same
solution.
"""
import argparse
import time

import numpy as np

from netfilt import lasso
from netfilt.graph import gen_ba
from netfilt.model import build_simple
from netfilt.sampling import sample_training


def bench(kernel, X, y, grid, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        sols = lasso.lasso_path(X, y, grid, backend=kernel)
        best = min(best, time.perf_counter() - t0)
    return best, sols


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=50)
    ap.add_argument("--p", type=int, default=100)
    ap.add_argument("--points", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    m = build_simple(gen_ba(args.p, 2, rng), 1.25, enforce_pd=True)
    Y = sample_training(m, args.n, rng)
    X, y = np.asfortranarray(Y[:, 1:]), Y[:, 0]
    grid = lasso.default_mu_grid(Y, n_points=args.points)

    results = {}
    for kernel in sorted(lasso.KERNELS):
        t, sols = bench(kernel, X, y, grid, args.repeat)
        results[kernel] = (t, np.array([s.coefficients for s in sols]))
        print(f"{kernel:>8}: {t * 1e3:9.2f} ms per path ({args.points} mu values, n={args.n}, p={args.p})")
    if len(results) == 2:
        (tc, bc), (tp, bp) = results["cython"], results["python"]
        print(f" speedup: {tp / tc:9.1f}x   max |coef diff| = {np.abs(bc - bp).max():.2e}")
    else:
        print("compiled kernel not built; only the Python kernel was timed")


if __name__ == "__main__":
    main()

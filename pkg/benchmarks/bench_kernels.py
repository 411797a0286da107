"""Compare the compiled kernels with the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Each row is the best of ``--repeat`` timings.
"""
import argparse
import time

import numpy as np

from cartpso import _kernels_py

try:
    from cartpso import _kernels
except ImportError:
    _kernels = None


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(n, d):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(n, d))
    y = np.where(X[:, 0] + 0.5 * rng.normal(size=n) > 0, 1.0, -1.0)
    K = _kernels_py.rbf_gram(X, X, 1.0)
    v = np.sort(rng.normal(size=n))
    labels = rng.integers(0, 2, n).astype(np.int64)
    return {
        f"rbf_gram {n}x{d}": lambda m: m.rbf_gram(X, X, 1.0),
        f"smo_solve n={n}": lambda m: m.smo_solve(K, y, 1.0, 1e-3, 200 * n),
        f"split_scan n={n}": lambda m: m.split_scan(v, labels, 2),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 300, 600])
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels are not built; only the fallback can be timed")
    print(f"{'case':<24}{'numpy (ms)':>12}{'cython (ms)':>13}{'speedup':>9}")
    for n in args.sizes:
        for name, fn in cases(n, 9).items():
            py = best_time(lambda: fn(_kernels_py), args.repeat)
            if _kernels is None:
                print(f"{name:<24}{py * 1e3:>12.3f}{'-':>13}{'-':>9}")
                continue
            cy = best_time(lambda: fn(_kernels), args.repeat)
            print(f"{name:<24}{py * 1e3:>12.3f}{cy * 1e3:>13.3f}{py / cy:>8.1f}x")


if __name__ == "__main__":
    main()

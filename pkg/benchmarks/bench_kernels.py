#!/usr/bin/env python3
"""Numba kernels against their pure-numpy fallbacks.

Usage:
    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called once per backend before timing so JIT compilation is
excluded. Results of the two backends are checked for agreement.
"""

import argparse
import time

import numpy as np

from weighted_kelly import _accel, kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    key = kernels.run_key(12345)
    cdf = np.cumsum([0.2, 0.3, 0.1, 0.4])
    cdf[-1] = 1.0
    probs = np.array([0.6, 0.4])
    incs = np.log1p(0.2 * np.array([1.0, -1.0]))
    probs3 = np.array([0.4, 0.3, 0.3])
    incs3 = np.log1p(0.1 * np.array([2.0, -1.0, -1.0]))
    return [
        ("uniforms 10^6", lambda b: kernels.uniforms(key, 0, 1_000_000, 1, backend=b)),
        ("discrete_indices 10^5 x 10", lambda b: kernels.discrete_indices(cdf, 10, key, 0, 100_000, backend=b)),
        ("standard_normals 10^5 x 5 x 2", lambda b: kernels.standard_normals(5, 2, key, 0, 100_000, backend=b)),
        ("enumerate m=2 n=20", lambda b: kernels.enumerate_constant(probs, incs, 20, backend=b)),
        ("enumerate m=3 n=13", lambda b: kernels.enumerate_constant(probs3, incs3, 13, backend=b)),
    ]


def agree(a, b):
    if isinstance(a, tuple):
        return all(agree(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-12, atol=0)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"{'kernel':34s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}  agree")
    for name, fn in cases():
        ref = fn("numpy")
        got = fn("numba")
        t_np = best_of(lambda: fn("numpy"), args.repeat)
        t_nb = best_of(lambda: fn("numba"), args.repeat)
        print(f"{name:34s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:7.1f}x  {agree(ref, got)}")


if __name__ == "__main__":
    main()

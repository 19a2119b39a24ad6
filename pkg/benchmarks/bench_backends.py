"""Time the compiled kernels against the numpy fallback.

Run with:  python3 benchmarks/bench_backends.py
"""
import importlib
import time

import numpy as np

from harmonmf.kernels import _np_core

SIZES = [(129, 60), (129, 500), (512, 2000)]
REPEATS = 200


def _time(fn, *args, repeats=REPEATS):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench(mod, label):
    print(f"\n{label}")
    rng = np.random.default_rng(0)
    for K, T in SIZES:
        Y = rng.random((K, T)) + 1e-6
        V = rng.random((K, T)) + 1e-6
        out = np.empty_like(Y)
        d = rng.standard_normal(K)
        x = rng.standard_normal(T)
        t_ratio = _time(mod.refresh_ratio, Y, V, 1e-12, out)
        t_rank1 = _time(mod.rank1_add, V, d, x)
        t_kl = _time(mod.kl_divergence_floored, Y, V, 1e-12)
        print(f"  {K:4d}x{T:<5d} refresh_ratio {t_ratio * 1e6:8.1f} us"
              f"  rank1_add {t_rank1 * 1e6:8.1f} us"
              f"  kl {t_kl * 1e6:8.1f} us")


def main():
    bench(_np_core, "numpy fallback")
    try:
        cy = importlib.import_module("harmonmf.kernels._cy_core")
    except ImportError:
        print("\ncompiled backend not built; skipping")
        return
    bench(cy, "compiled (cython)")


if __name__ == "__main__":
    main()

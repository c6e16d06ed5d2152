"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 512] [--repeat 7]

Both paths are called explicitly, so GCLAB_NO_NUMBA only matters for the
default used elsewhere. The first numba call (compilation) is excluded.
"""
import argparse
import timeit

import numpy as np

from gclab import _kernels as k


def cases(n, rng):
    f = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    X = rng.normal(size=n * n) + 2 + 1j * rng.normal(size=n * n)
    V = rng.normal(size=n * n) + 0.5j
    Vp = rng.normal(size=n * n) + 0j
    h = 1.0 / n
    return {
        "dx order 4": lambda nb: k.dx(f, h, 4, use_numba=nb),
        "dy order 4": lambda nb: k.dy(f, h, 4, use_numba=nb),
        "laplacian order 2": lambda nb: k.laplacian(f, h, h, 2, use_numba=nb),
        "pvi rhs": lambda nb: k.pvi_rhs_array(0.1, 0.2, 0.3, 0.4, X, V, Vp, use_numba=nb),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=512)
    ap.add_argument("--repeat", type=int, default=7)
    a = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"numba available: {k.HAVE_NUMBA}, grid {a.n}x{a.n}")
    print(f"{'kernel':20s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, fn in cases(a.n, rng).items():
        t_np = min(timeit.repeat(lambda: fn(False), number=1, repeat=a.repeat)) * 1e3
        if k.HAVE_NUMBA:
            fn(True)
            t_nb = min(timeit.repeat(lambda: fn(True), number=1, repeat=a.repeat)) * 1e3
            print(f"{name:20s} {t_np:10.3f} {t_nb:10.3f} {t_np / t_nb:8.2f}")
        else:
            print(f"{name:20s} {t_np:10.3f} {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()

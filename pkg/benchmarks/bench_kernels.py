"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from preq import _pykernels

try:
    from preq import _ckernels
except ImportError:
    _ckernels = None


def _cases(rng):
    n = 3
    d = n * n
    L = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / d
    x0 = rng.standard_normal(d) + 0j
    c = np.zeros(d, dtype=np.complex128)
    m, s = 8192, 64
    F = np.broadcast_to(np.eye(2) + 1e-3 * rng.standard_normal((2, 2)), (s, 2, 2)).astype(complex)
    S = np.sqrt(1e-3) * np.eye(2, dtype=complex)
    z = rng.standard_normal((s, m, 2)) + 1j * rng.standard_normal((s, m, 2))

    def em(mod):
        phi = np.zeros((m, 2), dtype=np.complex128)
        mom = np.zeros((s, 2, 2), dtype=np.complex128)
        mod.em_block(phi, F, S, z, mom, None)

    return {
        "iterate_affine (d=9, 5000 steps)": lambda mod: mod.iterate_affine(L, c, x0, 5000),
        "rk4_affine (d=9, 5000 steps)": lambda mod: mod.rk4_affine(L, c, x0, 1e-3, 5000),
        "rk4_normalized (d=9, 5000 steps)": lambda mod: mod.rk4_normalized(L, x0, 1e-3, 5000, n),
        "em_block (8192 paths x 64 steps)": em,
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':36s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, case in _cases(rng).items():
        tp = best_of(lambda: case(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:36s} {tp * 1e3:12.2f} {'n/a':>12s} {'':>8s}")
            continue
        tc = best_of(lambda: case(_ckernels), args.repeat)
        print(f"{name:36s} {tp * 1e3:12.2f} {tc * 1e3:12.2f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()

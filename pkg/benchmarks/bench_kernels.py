"""Compare the numba kernels with their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the median wall time of each implementation and the largest difference
between their outputs.  The numba timings exclude the first (compiling) call.
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from pluripotential import kernels
from pluripotential._jit import HAS_NUMBA


def _timed(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return statistics.median(times), out


def psor_problem(size, seed=0):
    """Obstacle problem for omega - L phi >= 0 on a random weighted path+chords graph."""
    rng = np.random.default_rng(seed)
    lap = np.zeros((size, size))
    for i in range(size - 1):
        w = rng.uniform(0.5, 2)
        lap[i, i] += w
        lap[i + 1, i + 1] += w
        lap[i, i + 1] -= w
        lap[i + 1, i] -= w
    lap += 1e-3 * np.eye(size)
    return lap, np.ones(size), rng.normal(size=size)


def mixed_area_problem(count, seed=0):
    rng = np.random.default_rng(seed)
    angles = np.sort(rng.uniform(0, 2 * np.pi, size=(count, 6)), axis=1)
    radius = rng.uniform(0.5, 1.5, size=(count, 6, 1))
    p = np.stack([np.cos(angles), np.sin(angles)], axis=-1) * radius
    q = np.stack([np.cos(angles), np.sin(angles)], axis=-1) * radius[::-1]
    return p, q


def main(argv=None):
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--psor-size", type=int, default=60)
    parser.add_argument("--polygons", type=int, default=20000)
    args = parser.parse_args(argv)
    if not HAS_NUMBA:
        print("numba is not installed; only the numpy path is available")
        return 0

    k, b, f = psor_problem(args.psor_size)
    kernels.psor_jit(k, b, f, 10, 1e-13, 1.0)
    t_jit, (phi_jit, _) = _timed(lambda: kernels.psor_jit(k, b, f, 100000, 1e-13, 1.0), args.repeat)
    t_np, (phi_np, _) = _timed(lambda: kernels._psor_numpy(k, b, f, 100000, 1e-13, 1.0), args.repeat)
    print(f"psor       size={args.psor_size:6d}  numba {t_jit * 1e3:9.2f} ms  numpy {t_np * 1e3:9.2f} ms"
          f"  speedup {t_np / t_jit:7.1f}x  max|diff| {np.max(np.abs(phi_jit - phi_np)):.2e}")

    p, q = mixed_area_problem(args.polygons)
    kernels.mixed_area_jit(p[:2], q[:2])
    t_jit, a_jit = _timed(lambda: kernels.mixed_area_jit(p, q), args.repeat)
    t_np, a_np = _timed(lambda: kernels.mixed_area_numpy(p, q), args.repeat)
    print(f"mixed_area count={args.polygons:6d}  numba {t_jit * 1e3:9.2f} ms  numpy {t_np * 1e3:9.2f} ms"
          f"  speedup {t_np / t_jit:7.1f}x  max|diff| {np.max(np.abs(a_jit - a_np)):.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Time the hot kernels on the numpy and numba backends.

Shapes mirror the production experiments: noise-averaged amplification
trajectories on the canonical flattened-profile lattice, density-matrix
accumulation on the dephasing lattice, and the analytic dephasing map at the
dimension cap.  Run with ``python3 benchmarks/bench_backends.py``.
"""

import argparse
import math
import time

import numpy as np

from qkr import _kernels


def _trajectory_inputs(dim=827, n_real=400, r=10, n_marked=3):
    rng = np.random.Generator(np.random.Philox(key=[1, 0]))
    theta = 2.0 * np.pi * np.arange(dim) / dim
    v = np.cos(theta)
    psi0 = np.exp(-1j * 50.0 * v) / math.sqrt(dim)
    marked = np.array([-11.0, 0.0, 11.0])[:n_marked]
    chi = np.exp(1j * np.outer(marked, theta)) / math.sqrt(dim)
    rev = -rng.normal(50.0, 0.05, size=(n_real, r))
    fwd = rng.normal(50.0, 0.05, size=(n_real, r))
    return psi0, v, np.ascontiguousarray(chi), rev, fwd


def _density_inputs(dim=65, n_real=5000):
    rng = np.random.Generator(np.random.Philox(key=[2, 0]))
    theta = 2.0 * np.pi * np.arange(dim) / dim
    v = np.cos(theta)
    psi0 = np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128)
    totals = rng.normal(50.0, 0.18, size=n_real)
    return psi0, v, totals


def _dephasing_inputs(dim=1025):
    theta = 2.0 * np.pi * np.arange(dim) / dim
    v = np.cos(theta)
    rho = np.full((dim, dim), 1.0 / dim, dtype=np.complex128)
    return rho, v


def _best_of(fn, args, repeat):
    fn(*args)  # warm up (JIT compile, cache fill)
    best = math.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def run_benchmarks(repeat):
    cases = [
        ("trajectory_success_batch (dim 827, R=400, r=10)",
         "trajectory_success_batch", _trajectory_inputs()),
        ("accumulate_density (dim 65, R=5000)",
         "accumulate_density", _density_inputs()),
        ("dephasing_map (dim 1025, m=200)",
         "dephasing_map", (*_dephasing_inputs(), 200, 0.25, 0.0125)),
    ]
    have_numba = _kernels._numba_available()
    if have_numba:
        from qkr import _kernels_numba
    else:
        print("numba is not importable; timing the numpy backend only")

    width = max(len(label) for label, _, _ in cases)
    header = f"{'kernel':<{width}}  {'numpy':>10}"
    if have_numba:
        header += f"  {'numba':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, name, args in cases:
        t_np = _best_of(getattr(_kernels, f"{name}_numpy"), args, repeat)
        line = f"{label:<{width}}  {t_np * 1e3:>8.2f}ms"
        if have_numba:
            t_nb = _best_of(getattr(_kernels_numba, name), args, repeat)
            line += f"  {t_nb * 1e3:>8.2f}ms  {t_np / t_nb:>7.2f}x"
        print(line)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="timed repetitions")
    args = parser.parse_args()
    run_benchmarks(max(1, args.repeat))


if __name__ == "__main__":
    main()

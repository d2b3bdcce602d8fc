"""Time the numba kernels against their pure-numpy counterparts.

Run: python3 benchmarks/bench_kernels.py [--repeat N]

Both flavours are importable regardless of NUQW_BACKEND, so one process
compares them directly.  Results are checked for agreement before timing.
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from nuqw import CoinField, CoinSpec, Frame, WalkerState, lattice_half_width
from nuqw import kernels


def _best(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _evolve(step, psi, tables, p, steps):
    for _ in range(steps):
        psi, _, _ = step(psi, *tables, p)
    return psi


def bench_steps(repeat: int) -> None:
    print("floquet step: evolve |0,+> for T steps on the minimal lattice")
    print(f"{'T':>6} {'sites':>7} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>8}")
    for steps in (10, 100, 500, 2000):
        L = lattice_half_width(steps)
        tables = CoinField.homogeneous(CoinSpec(-3 * math.pi / 7, math.pi / 4), L).trig_tables(Frame.PRIME)
        psi = WalkerState.localized(L).amplitudes
        a = _evolve(kernels.step_numpy, psi, tables, 2 / 3, steps)
        b = _evolve(kernels.step_numba, psi, tables, 2 / 3, steps)
        assert np.allclose(a, b, atol=1e-14)
        t_np = _best(lambda: _evolve(kernels.step_numpy, psi, tables, 2 / 3, steps), repeat)
        t_nb = _best(lambda: _evolve(kernels.step_numba, psi, tables, 2 / 3, steps), repeat)
        print(f"{steps:>6} {2 * L + 1:>7} {1e3 * t_np:>12.2f} {1e3 * t_nb:>12.2f} {t_np / t_nb:>8.1f}")


def bench_monte_carlo(repeat: int) -> None:
    print("\nmonte carlo: trajectories of 6 steps")
    print(f"{'trials':>8} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>8}")
    steps = 6
    L = lattice_half_width(steps)
    tables = CoinField.homogeneous(CoinSpec(0.4, 1.1), L).trig_tables(Frame.PRIME)
    psi = WalkerState.localized(L).amplitudes
    for trials in (1_000, 10_000, 100_000):
        u = np.random.Generator(np.random.PCG64(0)).random((trials, steps))
        ca, _ = kernels.monte_carlo_numpy(psi, *tables, 0.5, u)
        cb, _ = kernels.monte_carlo_numba(psi, *tables, 0.5, u)
        assert np.array_equal(ca, cb)
        t_np = _best(lambda: kernels.monte_carlo_numpy(psi, *tables, 0.5, u), repeat)
        t_nb = _best(lambda: kernels.monte_carlo_numba(psi, *tables, 0.5, u), repeat)
        print(f"{trials:>8} {1e3 * t_np:>12.2f} {1e3 * t_nb:>12.2f} {t_np / t_nb:>8.1f}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="timings per case (best is reported)")
    args = parser.parse_args()
    if not kernels.HAS_NUMBA:
        print("numba is not installed; nothing to compare")
        return
    # compile once outside the timed region
    psi = np.zeros((5, 2), complex)
    psi[2] = [1, 0]
    tables = CoinField.homogeneous(CoinSpec(0.1, 0.2), 2).trig_tables(Frame.PRIME)
    kernels.step_numba(psi, *tables, 0.5)
    bench_steps(args.repeat)
    bench_monte_carlo(args.repeat)


if __name__ == "__main__":
    main()

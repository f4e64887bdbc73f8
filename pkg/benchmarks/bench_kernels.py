"""Compiled vs pure-numpy phase kernels, plus one full evolution step.

Run ``python benchmarks/bench_kernels.py [--sizes 256 512 1024] [--repeat 5]``.
"""
import argparse
import time

import numpy as np

from mlab import kernels
from mlab.evolve import EvolutionConfig, evolve_to
from mlab.phasespace import gaussian_state, make_grid
from mlab.potentials import Duffing


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_kernel(n, repeat, backends):
    rng = np.random.default_rng(0)
    z0 = rng.normal(size=(n, n // 2 + 1)) + 1j * rng.normal(size=(n, n // 2 + 1))
    a = rng.normal(size=(3, n))
    b = rng.normal(size=(3, n // 2 + 1))
    phi = rng.normal(size=z0.shape)
    damp = np.exp(-rng.random(n // 2 + 1))
    rows = []
    for backend in backends:
        z = z0.copy()
        sep = best_of(lambda: kernels.apply_separable_phase(z, a, b, damp, n // 2, -1, backend=backend), repeat)
        den = best_of(lambda: kernels.apply_dense_phase(z, phi, damp, n // 2, -1, backend=backend), repeat)
        rows.append((backend, sep, den))
    return rows


def bench_step(n, repeat):
    g = make_grid(n, n, -8, 8, -40, 40)
    s = gaussian_state(g, -3, 8, 0.2, 0.5, kind="wigner", hbar=0.1)
    pot = Duffing()
    cfg = EvolutionConfig("quantum_master", 0.02, pot.period / 500)
    steps = 10
    t = best_of(lambda: evolve_to(s, pot, cfg, steps * cfg.dt, check_leakage=False), repeat)
    return t / steps


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 512, 1024])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'n':>6} {'backend':>8} {'separable ms':>13} {'dense ms':>9}")
    for n in args.sizes:
        for backend, sep, den in bench_kernel(n, args.repeat, backends):
            print(f"{n:>6} {backend:>8} {1e3 * sep:>13.2f} {1e3 * den:>9.2f}")
    print(f"\n{'n':>6} {'quantum master step ms':>23}")
    for n in args.sizes:
        print(f"{n:>6} {1e3 * bench_step(n, max(1, args.repeat // 2)):>23.2f}")


if __name__ == "__main__":
    main()

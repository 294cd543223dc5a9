"""Time the compiled and pure-Python kernels on representative workloads.

Usage::

    python benchmarks/bench_kernels.py [--repeat 3]

Workloads mirror the package's hot loops: reduced forced propagation at
rank 11 over a 2 s record, RK4 simulation of the converter, and the
integral-contribution power sums.
"""
import argparse
import timeit

import numpy as np

from modalkit import _kernels
from modalkit.simulator import ConverterParams, converter_matrices


def workloads(rng):
    F = rng.standard_normal((11, 11)) * 0.2
    G = rng.standard_normal((11, 1000))
    U = rng.standard_normal((1000, 4000))
    A0, B = converter_matrices(ConverterParams(), 0.0)
    A1 = converter_matrices(ConverterParams(), 1.0)[0] - A0
    u = (155.0 * np.sin(2 * np.pi * 50 * 4e-4 * np.arange(5001)))[None, :]
    mags = rng.uniform(0.9, 1.0, 11)
    return {
        "propagate r=11, e=1000, 4000 steps": lambda b: _kernels.propagate(F, G, np.zeros(11), U, backend=b),
        "rk4 converter, 5001 samples x 16": lambda b: _kernels.rk4(
            A0, A1, B, [0.0, 170.0], u, 4e-4, 16, 0.8, 0.05, 2.0, 0.0, backend=b),
        "power sums, 11 modes, n=4000": lambda b: _kernels.power_abs_sums(mags, 4000, backend=b),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    backends = ["python"] + (["cython"] if _kernels.BACKEND == "cython" else [])
    if len(backends) == 1:
        print("compiled kernels not built; timing the pure-Python fallback only")
    rng = np.random.default_rng(0)
    print(f"{'workload':<38}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in workloads(rng).items():
        times = [min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat)) for b in backends]
        speedup = f"{times[0] / times[1]:9.1f}x" if len(times) == 2 else ""
        print(f"{name:<38}" + "".join(f"{t * 1e3:10.2f}ms" for t in times) + f" {speedup}")


if __name__ == "__main__":
    main()

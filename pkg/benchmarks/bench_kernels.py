"""Compare the compiled kernels with the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints best-of-N wall times per kernel and for two end-to-end calls, plus
the speedup of the compiled backend.
"""
import argparse
import contextlib
import importlib
import timeit

import numpy as np

from photonstarved import _pykernels, kernels
from photonstarved.modulation import simulate_link
from photonstarved.ppm import optimize_order
from photonstarved.rng import RandomStream

KERNELS = ("displaced_thermal_logpmf", "fwht_rows", "frame_scores")


@contextlib.contextmanager
def backend(module):
    saved = {name: getattr(kernels, name) for name in KERNELS}
    try:
        for name in KERNELS:
            setattr(kernels, name, getattr(module, name))
        yield
    finally:
        for name, fn in saved.items():
            setattr(kernels, name, fn)


def cases():
    rng = np.random.default_rng(0)
    rows = rng.standard_normal((2048, 1024)) + 1j * rng.standard_normal((2048, 1024))
    counts = rng.poisson(0.2, size=(100_000, 16)).astype(np.int64)
    truth = rng.integers(0, 16, size=100_000).astype(np.int64)
    lp1 = _pykernels.displaced_thermal_logpmf(3.0, 0.05, int(counts.max()))
    lp0 = _pykernels.displaced_thermal_logpmf(0.0, 0.05, int(counts.max()))
    return {
        "pmf E=500 n_b=1e-3 (k<=800)": lambda: kernels.displaced_thermal_logpmf(500.0, 1e-3, 800),
        "pmf E=2 n_b=1e-2 (k<=40)": lambda: kernels.displaced_thermal_logpmf(2.0, 1e-2, 40),
        "fwht 2048 x 1024 complex": lambda: kernels.fwht_rows(rows.copy()),
        "frame scores 1e5 x 16": lambda: kernels.frame_scores(counts, truth, lp1, lp0),
        "optimize_order n_a=1e-6": lambda: optimize_order(1e-6, 1e-3, "pnr"),
        "simulate hadamard M=64 2e4 frames": lambda: simulate_link("hadamard", 64, 0.02, 1e-3, "pnr", 20_000,
                                                                    RandomStream(1)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    try:
        compiled = importlib.import_module("photonstarved._ckernels")
    except ImportError:
        compiled = None
        print("compiled extension not built; timing the fallback only")
    table = cases()
    width = max(map(len, table))
    print(f"{'case':<{width}}  {'python':>10}  {'cython':>10}  {'speedup':>8}")
    for name, fn in table.items():
        with backend(_pykernels):
            t_py = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        if compiled is None:
            print(f"{name:<{width}}  {t_py * 1e3:9.2f}ms")
            continue
        with backend(compiled):
            t_c = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        print(f"{name:<{width}}  {t_py * 1e3:9.2f}ms  {t_c * 1e3:9.2f}ms  {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()

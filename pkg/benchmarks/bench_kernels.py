"""Compare the compiled and numpy Bessel kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from cursorwalk import _pykernels

try:
    from cursorwalk import _ckernels
except ImportError:  # extension not built
    _ckernels = None

CASES = [
    ("Chebyshev coefficients, z=500", 600, np.array([500.0])),
    ("closed forms, 3200 times", 2, np.linspace(0.0, 60.0, 3200)),
    ("packet table, 400 args", 200, np.linspace(0.1, 150.0, 400)),
]


def best_time(fn, repeat: int) -> float:
    number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"{'case':34s} {'python':>12s} {'cython':>12s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, nmax, x in CASES:
        tp = best_time(lambda: _pykernels.jn_table(nmax, x), args.repeat)
        if _ckernels is None:
            print(f"{name:34s} {tp * 1e3:10.3f}ms {'n/a':>12s}")
            continue
        tc = best_time(lambda: _ckernels.jn_table(nmax, x), args.repeat)
        diff = np.max(np.abs(_pykernels.jn_table(nmax, x) - _ckernels.jn_table(nmax, x)))
        print(f"{name:34s} {tp * 1e3:10.3f}ms {tc * 1e3:10.3f}ms {tp / tc:7.1f}x {diff:11.1e}")


if __name__ == "__main__":
    main()

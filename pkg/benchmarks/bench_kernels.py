"""Benchmark the compiled quantile-regression kernels against the numpy
fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from planu.kernels import _qr_py
from planu.quantile import midpoints

try:
    from planu.kernels import _qr_c
except ImportError:
    _qr_c = None


def bench(fn, values, taus, targets, kappa, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for v, t in zip(values, targets):
            fn(v, taus, t, kappa)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--calls", type=int, default=2000)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    cases = [
        ("n_q=51, 1 target", 51, 1),
        ("n_q=51, 51 targets", 51, 51),
        ("n_q=201, 201 targets", 201, 201),
    ]
    print(f"{args.calls} calls per timing, best of {args.repeats} repeats\n")
    header = f"{'case':<22} {'fn':<11} {'python':>10} {'compiled':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, nq, m in cases:
        taus = midpoints(nq)
        values = rng.normal(0, 1, (args.calls, nq))
        targets = rng.normal(0, 1, (args.calls, m))
        for name, py_fn, c_fn in (
            ("qr_loss", _qr_py.qr_loss, _qr_c.qr_loss if _qr_c else None),
            ("qr_gradient", _qr_py.qr_gradient, _qr_c.qr_gradient if _qr_c else None),
        ):
            t_py = bench(py_fn, values, taus, targets, 0.05, args.repeats)
            if c_fn is None:
                print(f"{label:<22} {name:<11} {t_py * 1e3:>8.2f}ms {'n/a':>10} {'n/a':>8}")
                continue
            t_c = bench(c_fn, values, taus, targets, 0.05, args.repeats)
            print(
                f"{label:<22} {name:<11} {t_py * 1e3:>8.2f}ms {t_c * 1e3:>8.2f}ms "
                f"{t_py / t_c:>7.1f}x"
            )
    if _qr_c is None:
        print("\ncompiled extension not available; showing python fallback only")


if __name__ == "__main__":
    main()

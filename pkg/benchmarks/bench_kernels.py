"""Compare the numba and numpy kernels.

    python3 benchmarks/bench_kernels.py [--shots N] [--pulses K] [--repeat R]

Prints the best-of-R wall time for each backend and checks that both
return identical results.
"""
import argparse
import time

import numpy as np

from expctl import _kernels


def best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_born(shots, repeat):
    g = np.random.default_rng(0)
    p = g.dirichlet(np.ones(8))
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    u = g.random(shots)
    rows = []
    ref = None
    for name, fn in (("numpy", _kernels.born_counts_numpy), ("numba", _kernels.born_counts_numba)):
        if fn is None:
            continue
        fn(cdf, u[:10])  # compile
        out = fn(cdf, u)
        ref = out if ref is None else ref
        assert np.array_equal(out, ref), "backends disagree"
        rows.append((name, best_time(lambda: fn(cdf, u), repeat)))
    return rows


def bench_rotations(pulses, repeat):
    g = np.random.default_rng(1)
    N = 16
    his = g.integers(1, N, size=pulses).astype(np.int64)
    los = np.array([g.integers(0, h) for h in his], dtype=np.int64)
    phis = g.uniform(-np.pi, np.pi, pulses)
    chis = g.uniform(-np.pi, np.pi, pulses)
    base = np.eye(N, dtype=complex)
    rows = []
    ref = None
    for name, fn in (("numpy", _kernels.rotate_rows_numpy), ("numba", _kernels.rotate_rows_numba)):
        if fn is None:
            continue
        fn(base.copy(), his[:2], los[:2], phis[:2], chis[:2])  # compile
        out = base.copy()
        fn(out, his, los, phis, chis)
        ref = out if ref is None else ref
        assert np.max(np.abs(out - ref)) < 1e-12, "backends disagree"
        rows.append((name, best_time(lambda: fn(base.copy(), his, los, phis, chis), repeat)))
    return rows


def show(title, rows):
    print(title)
    base = dict(rows).get("numpy")
    for name, t in rows:
        speed = f"  x{base / t:.1f}" if base else ""
        print(f"  {name:6s} {t * 1e3:9.2f} ms{speed}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shots", type=int, default=10_000_000)
    ap.add_argument("--pulses", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"active backend: {_kernels.BACKEND}")
    show(f"Born sampling, {args.shots} shots, 8 outcomes", bench_born(args.shots, args.repeat))
    show(f"rotation chain, {args.pulses} pulses on a 16x16 block", bench_rotations(args.pulses, args.repeat))


if __name__ == "__main__":
    main()

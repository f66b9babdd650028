"""Compiled kernels vs the numpy fallback on the four hot loops.

    python benchmarks/bench_backends.py [--repeats 3] [--csv out.csv]
"""
import argparse
import csv
import sys
import time

import numpy as np

from besvm import _backend


def _best(fn, repeats):
    fn()
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng):
    A = rng.normal(size=(20, 4, 4, 31))
    B = rng.normal(size=(200, 4, 4, 31))
    yield "grid_gram rigid h=1 20x200", lambda k: k.grid_gram(A, B, 1, 0, 0.0)
    yield "grid_gram deformable (1,1) 20x200", lambda k: k.grid_gram(A, B, 1, 1, 0.0)

    X = rng.normal(size=(500, 100))
    y = np.sign(rng.normal(size=500))
    qd = np.einsum("ij,ij->i", X, X) + 0.5
    perm = rng.permutation(500).astype(np.int64)

    def dcd(k):
        alpha, w = np.zeros(500), np.zeros(100)
        for _ in range(5):
            k.dcd_sweep(X, y, alpha, w, qd, 0.5, np.inf, perm)

    yield "dcd 5 sweeps 500x100", dcd

    P = rng.normal(size=(150, 2))
    K = np.exp(-((P[:, None] - P[None]) ** 2).sum(-1))
    yk = np.where(P[:, 0] * P[:, 1] > 0, 1.0, -1.0)
    yield "smo rbf n=150", lambda k: k.smo(K, yk, 1.0, 1e-3, 10_000_000)

    S = rng.normal(size=(60, 60))
    S = S + S.T
    yield "jacobi 60x60", lambda k: k.jacobi(S.copy(), 1e-12, 50)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--csv", help="also write rows to this file")
    args = parser.parse_args(argv)
    if "cython" not in _backend.BACKENDS:
        print("compiled extension not built; only the fallback is available", file=sys.stderr)
    rows = []
    rng = np.random.default_rng(0)
    for name, fn in cases(rng):
        t = {b: _best(lambda: fn(_backend.BACKENDS[b]), args.repeats) for b in sorted(_backend.BACKENDS)}
        speedup = t["python"] / t["cython"] if "cython" in t else float("nan")
        rows.append((name, t.get("cython", float("nan")) * 1e3, t["python"] * 1e3, speedup))
        print(f"{name:<36} cython {rows[-1][1]:9.2f} ms   python {rows[-1][2]:9.2f} ms   x{speedup:7.1f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["kernel", "cython_ms", "python_ms", "speedup"])
            w.writerows(rows)


if __name__ == "__main__":
    main()

"""Spectral and margin diagnostics, plus the training-time scaling benchmark."""
import csv
import io
import math
import time
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import (
    AsymmetricInput,
    DimensionMismatch,
    NoPositiveEigenvalue,
    NonConvergence,
    NonpositiveQuadraticForm,
    ZeroVarianceInput,
)

JACOBI_TOL = 1e-12
MAX_SWEEPS = 50
SIGN_TOL = 1e-10


@dataclass
class EigenDecomposition:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns
    sweeps: int = 0

    def reconstruct(self):
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T


def sym_eigen(A, tol=JACOBI_TOL, max_sweeps=MAX_SWEEPS, backend=None):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Converged when the off-diagonal Frobenius norm drops below
    ``tol * |A|_F``.
    """
    A = np.array(A, dtype=np.float64, order="C", copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise AsymmetricInput("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
    if A.size and np.max(np.abs(A - A.T)) > 1e-9 * scale:
        raise AsymmetricInput("matrix is not symmetric; symmetrize with (S + S.T) / 2 first")
    A = (A + A.T) / 2
    lam, V, sweeps, converged = _backend.get(backend).jacobi(A, float(tol), int(max_sweeps))
    if not converged:
        raise NonConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    order = np.argsort(-lam, kind="stable")
    return EigenDecomposition(lam[order], np.ascontiguousarray(V[:, order]), int(sweeps))


def _sign_threshold(lam, tol):
    lam = np.asarray(lam, dtype=np.float64)
    if lam.size == 0:
        raise ValueError("empty spectrum")
    return lam, (SIGN_TOL if tol is None else tol) * float(np.max(np.abs(lam)))


def neg_ratio(eigenvalues, tol=None):
    """Fraction of eigenvalues below -tol * max|lambda|."""
    lam, thr = _sign_threshold(eigenvalues, tol)
    return float(np.count_nonzero(lam < -thr)) / lam.size


def neg_energy(eigenvalues, tol=None):
    """Negative absolute eigenvalue mass over positive mass."""
    lam, thr = _sign_threshold(eigenvalues, tol)
    pos = lam[lam > thr].sum()
    if not pos > 0:
        raise NoPositiveEigenvalue("no positive eigenvalue; negative energy undefined")
    return float(np.abs(lam[lam < -thr]).sum() / pos)


def pearson_r(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise DimensionMismatch("need two equal-length sequences of at least 2 values")
    da, db = a - a.mean(), b - b.mean()
    na, nb = math.sqrt(da @ da), math.sqrt(db @ db)
    if na == 0 or nb == 0:
        raise ZeroVarianceInput("constant input has no correlation")
    return float(np.clip((da @ db) / (na * nb), -1.0, 1.0))


def _inverse_form(coef, y, M):
    coef = np.asarray(coef, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    if coef.shape != y.shape or M.shape != (len(y), len(y)):
        raise DimensionMismatch("coefficients, labels and matrix disagree in size")
    v = coef * y
    q = float(v @ M @ v)
    if not q > 0:
        raise NonpositiveQuadraticForm(f"quadratic form {q:.3g} is not positive")
    return 1.0 / q


def margin_k(alpha, y, K):
    """(alpha^T Y K Y alpha)^-1."""
    return _inverse_form(alpha, y, K)


def margin_be(beta, y, S_BX):
    """(beta^T Y S^T S Y beta)^-1 with S the basis-by-sample similarity matrix."""
    S = np.atleast_2d(np.asarray(S_BX, dtype=np.float64))
    return _inverse_form(beta, y, S.T @ S)


def margin_nystrom(alpha, y, K_XB, K_BB, K_BX, tol=1e-10):
    K_XB = np.atleast_2d(np.asarray(K_XB, dtype=np.float64))
    K_BX = np.atleast_2d(np.asarray(K_BX, dtype=np.float64))
    inv = np.linalg.pinv(np.atleast_2d(np.asarray(K_BB, dtype=np.float64)), rcond=tol)
    return _inverse_form(alpha, y, K_XB @ inv @ K_BX)


@dataclass
class SpectrumReport:
    label: str
    ng_rat: float
    ng_eng: float


def spectrum_report(label, S, backend=None):
    """NgRat / NgEng of a self-similarity matrix (symmetrized first)."""
    S = np.asarray(S, dtype=np.float64)
    eig = sym_eigen((S + S.T) / 2, backend=backend)
    return SpectrumReport(label, neg_ratio(eig.eigenvalues), neg_energy(eig.eigenvalues))


def reports_to_csv(reports, extra=None):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["measure", "NgRat", "NgEng"])
    for r in reports:
        writer.writerow([r.label, repr(r.ng_rat), repr(r.ng_eng)])
    return buf.getvalue()


def loglog_slope(xs, ts):
    xs = np.log(np.asarray(xs, dtype=np.float64))
    ts = np.log(np.asarray(ts, dtype=np.float64))
    return float(np.polyfit(xs, ts, 1)[0])


def time_interleaved(fns, rounds=7, warmup=1, clock=time.perf_counter):
    """Median time of each callable, timed round-robin.

    Interleaving spreads slow phases of a noisy machine over all callables
    instead of charging them to whichever happened to run at the time.
    """
    fns = list(fns)
    for _ in range(warmup):
        for fn in fns:
            fn()
    samples = [[] for _ in fns]
    for _ in range(rounds):
        for i, fn in enumerate(fns):
            t0 = clock()
            fn()
            samples[i].append(clock() - t0)
    return [float(np.median(s)) for s in samples]


@dataclass
class BenchResult:
    rows: list  # (n, seconds)
    slope: float


def time_call(fn, repeats=3, warmup=1, clock=time.perf_counter):
    """Best-of-``repeats`` time in seconds after ``warmup`` calls.

    ``clock`` defaults to wall time; pass ``time.process_time`` to measure
    CPU time of single-threaded work on a busy machine.
    """
    for _ in range(warmup):
        fn()
    best = math.inf
    for _ in range(repeats):
        t0 = clock()
        fn()
        best = min(best, clock() - t0)
    return best


def scaling_bench(n_values, basis_size, measure, trainer, generator, repeats=3, warmup=1,
                  clock=time.perf_counter):
    """Time ``trainer(payload, labels, measure, basis_size)`` per n.

    ``generator(n)`` returns ``(payload, labels)``. The slope is the least
    squares fit of log(time) against log(n).
    """
    n_values = list(n_values)
    if n_values != sorted(n_values):
        raise ValueError("n_values must be increasing")
    rows = []
    for n in n_values:
        payload, labels = generator(n)
        t = time_call(lambda: trainer(payload, labels, measure, basis_size), repeats, warmup, clock)
        rows.append((n, t))
    slope = loglog_slope([r[0] for r in rows], [r[1] for r in rows]) if len(rows) >= 2 else math.nan
    return BenchResult(rows, slope)

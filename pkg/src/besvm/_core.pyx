# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every function here has a numpy twin in ``_pycore`` with the same signature
and semantics; ``besvm._backend`` picks one at import time.
"""
import numpy as np

from libc.math cimport sqrt, fabs, INFINITY
from libc.stdlib cimport malloc, free


cdef void _pair_similarity(const double* a, const double* b,
                           int H, int W, int H2, int W2, int d,
                           int h_r, int h_l, double lam,
                           double* P, double* res) noexcept nogil:
    cdef int r = h_r + h_l
    cdef int side = 2 * r + 1
    cdef int HW = H * W
    cdef int dy, dx, cy, cx, ty, tx, k, o, c, zy, zx, ly, lx
    cdef double s, total, m, v, best
    cdef const double* pa
    cdef const double* pb

    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            o = (dy + r) * side + (dx + r)
            for cy in range(H):
                ty = cy + dy
                for cx in range(W):
                    tx = cx + dx
                    s = 0.0
                    if ty >= 0 and ty < H2 and tx >= 0 and tx < W2:
                        pa = a + (cy * W + cx) * d
                        pb = b + (ty * W2 + tx) * d
                        for k in range(d):
                            s = s + pa[k] * pb[k]
                    P[o * HW + cy * W + cx] = s

    best = -INFINITY
    for zy in range(-h_r, h_r + 1):
        for zx in range(-h_r, h_r + 1):
            total = 0.0
            if h_l == 0:
                o = (zy + r) * side + (zx + r)
                for c in range(HW):
                    total = total + P[o * HW + c]
            else:
                for c in range(HW):
                    m = -INFINITY
                    for ly in range(-h_l, h_l + 1):
                        for lx in range(-h_l, h_l + 1):
                            o = (zy + ly + r) * side + (zx + lx + r)
                            v = P[o * HW + c] - lam * (ly * ly + lx * lx)
                            if v > m:
                                m = v
                    total = total + m
            if total > best:
                best = total
    res[0] = best


def grid_gram(const double[:, :, :, ::1] A, const double[:, :, :, ::1] B,
              int h_r, int h_l, double lam):
    """out[i, j] = deformable similarity of A[i] (fixed) and B[j] (shifted)."""
    cdef Py_ssize_t nA = A.shape[0], nB = B.shape[0]
    cdef int H = <int>A.shape[1], W = <int>A.shape[2], d = <int>A.shape[3]
    cdef int H2 = <int>B.shape[1], W2 = <int>B.shape[2]
    cdef int r = h_r + h_l
    cdef Py_ssize_t i, j
    out_arr = np.empty((nA, nB), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double* P
    if nA == 0 or nB == 0:
        return out_arr
    P = <double*>malloc((2 * r + 1) * (2 * r + 1) * H * W * sizeof(double))
    if P == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(nA):
                for j in range(nB):
                    _pair_similarity(&A[i, 0, 0, 0], &B[j, 0, 0, 0], H, W, H2, W2, d,
                                     h_r, h_l, lam, P, &out[i, j])
    finally:
        free(P)
    return out_arr


def dcd_sweep(const double[:, ::1] X, const double[::1] y, double[::1] alpha,
              double[::1] w, const double[::1] qd, double diag, double upper,
              const long[::1] perm):
    """One pass of dual coordinate descent; returns (max PG, min PG)."""
    cdef Py_ssize_t D = X.shape[1]
    cdef Py_ssize_t t, i, k
    cdef double G, PG, old, new, delta
    cdef double pg_max = -INFINITY, pg_min = INFINITY
    with nogil:
        for t in range(perm.shape[0]):
            i = perm[t]
            G = 0.0
            for k in range(D):
                G = G + w[k] * X[i, k]
            G = y[i] * G - 1.0 + diag * alpha[i]
            PG = 0.0
            if alpha[i] == 0.0:
                if G < 0.0:
                    PG = G
            elif alpha[i] == upper:
                if G > 0.0:
                    PG = G
            else:
                PG = G
            if PG > pg_max:
                pg_max = PG
            if PG < pg_min:
                pg_min = PG
            if PG != 0.0:
                old = alpha[i]
                if qd[i] <= 0.0:
                    new = upper
                else:
                    new = old - G / qd[i]
                    if new < 0.0:
                        new = 0.0
                    elif new > upper:
                        new = upper
                alpha[i] = new
                delta = (new - old) * y[i]
                if delta != 0.0:
                    for k in range(D):
                        w[k] = w[k] + delta * X[i, k]
    return pg_max, pg_min


def smo(const double[:, ::1] K, const double[::1] y, double C, double tol,
        long max_iter):
    """Maximal-violating-pair SMO for the box-constrained dual.

    Returns (alpha, gradient, iterations); gradient is of
    0.5 a^T Q a - sum(a) with Q = Y K Y.
    """
    cdef Py_ssize_t n = K.shape[0]
    alpha_arr = np.zeros(n, dtype=np.float64)
    grad_arr = -np.ones(n, dtype=np.float64)
    cdef double[::1] a = alpha_arr
    cdef double[::1] G = grad_arr
    cdef Py_ssize_t t, i, j
    cdef long it = 0
    cdef double gmax, gmin, v, quad, delta, diff, s, old_i, old_j, di, dj
    with nogil:
        while it < max_iter:
            gmax = -INFINITY
            gmin = INFINITY
            i = -1
            j = -1
            for t in range(n):
                v = -y[t] * G[t]
                if (y[t] > 0 and a[t] < C) or (y[t] < 0 and a[t] > 0):
                    if v > gmax:
                        gmax = v
                        i = t
                if (y[t] > 0 and a[t] > 0) or (y[t] < 0 and a[t] < C):
                    if v < gmin:
                        gmin = v
                        j = t
            if i < 0 or j < 0 or gmax - gmin < tol:
                break
            it += 1
            old_i = a[i]
            old_j = a[j]
            quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
            if quad <= 0.0:
                quad = 1e-12
            if y[i] != y[j]:
                delta = (-G[i] - G[j]) / quad
                diff = a[i] - a[j]
                a[i] = a[i] + delta
                a[j] = a[j] + delta
                if diff > 0:
                    if a[j] < 0:
                        a[j] = 0
                        a[i] = diff
                else:
                    if a[i] < 0:
                        a[i] = 0
                        a[j] = -diff
                if diff > 0:
                    if a[i] > C:
                        a[i] = C
                        a[j] = C - diff
                else:
                    if a[j] > C:
                        a[j] = C
                        a[i] = C + diff
            else:
                delta = (G[i] - G[j]) / quad
                s = a[i] + a[j]
                a[i] = a[i] - delta
                a[j] = a[j] + delta
                if s > C:
                    if a[i] > C:
                        a[i] = C
                        a[j] = s - C
                else:
                    if a[j] < 0:
                        a[j] = 0
                        a[i] = s
                if s > C:
                    if a[j] > C:
                        a[j] = C
                        a[i] = s - C
                else:
                    if a[i] < 0:
                        a[i] = 0
                        a[j] = s
            di = a[i] - old_i
            dj = a[j] - old_j
            for t in range(n):
                G[t] = G[t] + y[t] * (y[i] * K[t, i] * di + y[j] * K[t, j] * dj)
    return alpha_arr, grad_arr, it


def jacobi(double[:, ::1] A, double tol, int max_sweeps):
    """Cyclic Jacobi, in place on A. Returns (diag, V, sweeps, converged)."""
    cdef Py_ssize_t p = A.shape[0]
    V_arr = np.eye(p, dtype=np.float64)
    cdef double[:, ::1] V = V_arr
    cdef Py_ssize_t i, j, k
    cdef int sweep = 0
    cdef bint converged = False
    cdef double fro = 0.0, off, theta, t, c, s, x, z
    for i in range(p):
        for j in range(p):
            fro += A[i, j] * A[i, j]
    fro = sqrt(fro)
    with nogil:
        while True:
            off = 0.0
            for i in range(p):
                for j in range(i + 1, p):
                    off += 2.0 * A[i, j] * A[i, j]
            off = sqrt(off)
            if off <= tol * fro:
                converged = True
                break
            if sweep >= max_sweeps:
                break
            sweep += 1
            for i in range(p):
                for j in range(i + 1, p):
                    if A[i, j] == 0.0:
                        continue
                    theta = (A[j, j] - A[i, i]) / (2.0 * A[i, j])
                    if fabs(theta) > 1e150:
                        t = 0.5 / theta
                    else:
                        t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                        if theta < 0:
                            t = -t
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    for k in range(p):
                        x = A[k, i]
                        z = A[k, j]
                        A[k, i] = c * x - s * z
                        A[k, j] = s * x + c * z
                    for k in range(p):
                        x = A[i, k]
                        z = A[j, k]
                        A[i, k] = c * x - s * z
                        A[j, k] = s * x + c * z
                    A[i, j] = 0.0
                    A[j, i] = 0.0
                    for k in range(p):
                        x = V[k, i]
                        z = V[k, j]
                        V[k, i] = c * x - s * z
                        V[k, j] = s * x + c * z
    diag = np.array([A[i, i] for i in range(p)], dtype=np.float64)
    return diag, V_arr, sweep, converged

"""Pure numpy implementations of the inner loops in ``_core.pyx``."""
import math

import numpy as np

# cap on the number of float64 entries held by one offset-product block
_BLOCK_ENTRIES = 1 << 22


def grid_gram(A, B, h_r, h_l, lam):
    """out[i, j] = deformable similarity of A[i] (fixed) and B[j] (shifted)."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    nA, H, W, d = A.shape
    nB, H2, W2, _ = B.shape
    out = np.empty((nA, nB))
    if nA == 0 or nB == 0:
        return out
    r = h_r + h_l
    side = 2 * r + 1
    padded = np.zeros((nB, H + 2 * r, W + 2 * r, d))
    hh, ww = min(H2, H + r), min(W2, W + r)
    padded[:, r:r + hh, r:r + ww] = B[:, :hh, :ww]
    A_flat = A.reshape(nA, H * W, d)

    per_sample = nA * H * W * side * side
    chunk = max(1, _BLOCK_ENTRIES // per_sample)
    shifts = [(dy, dx) for dy in range(-r, r + 1) for dx in range(-r, r + 1)]
    local = [(ly, lx) for ly in range(-h_l, h_l + 1) for lx in range(-h_l, h_l + 1)]

    for start in range(0, nB, chunk):
        stop = min(nB, start + chunk)
        P = np.empty((side * side, nA, stop - start, H * W))
        for o, (dy, dx) in enumerate(shifts):
            view = padded[start:stop, r + dy:r + dy + H, r + dx:r + dx + W]
            P[o] = np.einsum("acd,bcd->abc", A_flat, view.reshape(stop - start, H * W, d))
        best = np.full((nA, stop - start), -np.inf)
        for zy in range(-h_r, h_r + 1):
            for zx in range(-h_r, h_r + 1):
                if h_l == 0:
                    total = P[(zy + r) * side + zx + r].sum(axis=-1)
                else:
                    m = None
                    for ly, lx in local:
                        v = P[(zy + ly + r) * side + zx + lx + r]
                        if lam:
                            v = v - lam * (ly * ly + lx * lx)
                        m = v if m is None else np.maximum(m, v)
                    total = m.sum(axis=-1)
                np.maximum(best, total, out=best)
        out[:, start:stop] = best
    return out


def dcd_sweep(X, y, alpha, w, qd, diag, upper, perm):
    pg_max, pg_min = -math.inf, math.inf
    for i in perm:
        G = y[i] * X[i].dot(w) - 1.0 + diag * alpha[i]
        a = alpha[i]
        if a == 0.0:
            PG = min(G, 0.0)
        elif a == upper:
            PG = max(G, 0.0)
        else:
            PG = G
        pg_max = max(pg_max, PG)
        pg_min = min(pg_min, PG)
        if PG != 0.0:
            new = upper if qd[i] <= 0.0 else min(max(a - G / qd[i], 0.0), upper)
            alpha[i] = new
            delta = (new - a) * y[i]
            if delta != 0.0:
                w += delta * X[i]
    return pg_max, pg_min


def smo(K, y, C, tol, max_iter):
    n = K.shape[0]
    a = np.zeros(n)
    G = -np.ones(n)
    pos = y > 0
    it = 0
    while it < max_iter:
        v = -y * G
        up = (pos & (a < C)) | (~pos & (a > 0))
        low = (pos & (a > 0)) | (~pos & (a < C))
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(v[up])])
        j = int(np.flatnonzero(low)[np.argmin(v[low])])
        if v[i] - v[j] < tol:
            break
        it += 1
        old_i, old_j = a[i], a[j]
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0.0:
            quad = 1e-12
        ai, aj = a[i], a[j]
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            delta = (G[i] - G[j]) / quad
            s = ai + aj
            ai -= delta
            aj += delta
            if s > C:
                if ai > C:
                    ai, aj = C, s - C
            elif aj < 0:
                aj, ai = 0.0, s
            if s > C:
                if aj > C:
                    aj, ai = C, s - C
            elif ai < 0:
                ai, aj = 0.0, s
        a[i], a[j] = ai, aj
        G += y * (y[i] * K[:, i] * (ai - old_i) + y[j] * K[:, j] * (aj - old_j))
    return a, G, it


def jacobi(A, tol, max_sweeps):
    p = A.shape[0]
    V = np.eye(p)
    fro = math.sqrt(float(np.sum(A * A)))
    sweep = 0
    converged = False
    iu = np.triu_indices(p, 1)
    while True:
        off = math.sqrt(2.0 * float(np.sum(A[iu] ** 2)))
        if off <= tol * fro:
            converged = True
            break
        if sweep >= max_sweeps:
            break
        sweep += 1
        for i in range(p):
            for j in range(i + 1, p):
                apq = A[i, j]
                if apq == 0.0:
                    continue
                theta = (A[j, j] - A[i, i]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ci, cj = A[:, i].copy(), A[:, j].copy()
                A[:, i] = c * ci - s * cj
                A[:, j] = s * ci + c * cj
                ri, rj = A[i, :].copy(), A[j, :].copy()
                A[i, :] = c * ri - s * rj
                A[j, :] = s * ri + c * rj
                A[i, j] = A[j, i] = 0.0
                vi, vj = V[:, i].copy(), V[:, j].copy()
                V[:, i] = c * vi - s * vj
                V[:, j] = s * vi + c * vj
    return np.diag(A).copy(), V, sweep, converged

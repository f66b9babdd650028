"""Independent reference implementations used to freeze expected values.

Written as plain loops straight from the definitions so they share no code
with the package.
"""
import itertools

import numpy as np


def _padded_cell(g, y, x):
    H, W, d = g.shape
    if 0 <= y < H and 0 <= x < W:
        return g[y, x]
    return np.zeros(d)


def grid_similarity(gx, gy, h_r, h_l, lam=0.0):
    """max_zR sum_p max_zL <gx[p], gy[p + zR + zL]> - lam |zL|^2, zero padded."""
    H, W, _ = gx.shape
    best = -np.inf
    rng_r = range(-h_r, h_r + 1)
    rng_l = range(-h_l, h_l + 1)
    for zy, zx in itertools.product(rng_r, rng_r):
        total = 0.0
        for y in range(H):
            for x in range(W):
                local = -np.inf
                for ly, lx in itertools.product(rng_l, rng_l):
                    v = float(gx[y, x] @ _padded_cell(gy, y + zy + ly, x + zx + lx))
                    local = max(local, v - lam * (ly * ly + lx * lx))
                total += local
        best = max(best, total)
    return best


def squared_hinge_primal(w, X, y, C):
    m = np.maximum(0.0, 1.0 - y * (X @ w))
    return 0.5 * float(w @ w) + C * float(m @ m)


def squared_hinge_oracle(X, y, C):
    """Exact minimum by enumerating active sets.

    For a fixed active set S the objective is the quadratic
    1/2|w|^2 + C sum_S (1 - y_i x_i.w)^2 with minimizer
    (I + 2C X_S^T X_S) w = 2C X_S^T y_S. The true objective is convex and
    each candidate is evaluated with the true (max) loss, so the least value
    over all subsets is the global minimum: the optimum's own active set is
    among the candidates and gives exactly the optimum.
    """
    n, d = X.shape
    best = squared_hinge_primal(np.zeros(d), X, y, C)
    best_w = np.zeros(d)
    for mask in range(1, 1 << n):
        S = [i for i in range(n) if mask >> i & 1]
        XS, yS = X[S], y[S]
        w = np.linalg.solve(np.eye(d) + 2 * C * XS.T @ XS, 2 * C * XS.T @ yS)
        f = squared_hinge_primal(w, X, y, C)
        if f < best:
            best, best_w = f, w
    return best, best_w

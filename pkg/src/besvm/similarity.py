"""Pairwise similarity measures and similarity (Gram) matrices.

Grid measures take a global shift of the second argument within a square
window of ``h_r`` cells and, for the deformable measure, an additional
per-cell local shift within ``h_l`` cells; cells outside a grid read as
zero. Only the second argument is shifted, so the deformable measure is
not symmetric in general. In a Gram matrix rows are the fixed side
(basis) and columns the shifted side (samples).
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import CellDimMismatch, DimensionMismatch, RepresentationMismatch
from .features import FeatureGrid

LINEAR, RBF, RIGID, DEFORMABLE = "linear", "rbf", "rigid", "deformable"
_KINDS = (LINEAR, RBF, RIGID, DEFORMABLE)

_RBF_CHUNK = 1 << 22


@dataclass(frozen=True)
class SimilarityMeasure:
    kind: str
    gamma: float = 1.0
    h_r: int = 0
    h_l: int = 0
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown measure kind {self.kind!r}")
        if self.kind == RBF and not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.h_r < 0 or self.h_l < 0 or self.lam < 0:
            raise ValueError("h_r, h_l and lambda must be nonnegative")

    @classmethod
    def linear(cls):
        return cls(LINEAR)

    @classmethod
    def rbf(cls, gamma=1.0):
        return cls(RBF, gamma=float(gamma))

    @classmethod
    def rigid(cls, h_r):
        return cls(RIGID, h_r=int(h_r))

    @classmethod
    def deformable(cls, h_r, h_l, lam=0.0):
        return cls(DEFORMABLE, h_r=int(h_r), h_l=int(h_l), lam=float(lam))

    @property
    def on_grids(self):
        return self.kind in (RIGID, DEFORMABLE)

    @property
    def symmetric(self):
        return self.kind != DEFORMABLE or self.h_l == 0

    @property
    def label(self):
        if self.kind == LINEAR:
            return "L"
        if self.kind == RBF:
            return "R" if self.gamma == 1.0 else f"R[{self.gamma:g}]"
        h_l = self.h_l if self.kind == DEFORMABLE else 0
        return f"({self.h_r},{h_l})"

    def __call__(self, x, y):
        return evaluate(self, x, y)

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == RBF:
            d["gamma"] = self.gamma
        if self.on_grids:
            d["h_r"] = self.h_r
        if self.kind == DEFORMABLE:
            d["h_l"] = self.h_l
            d["lambda"] = self.lam
        return d

    @classmethod
    def from_dict(cls, d):
        kind = d["kind"]
        if kind == LINEAR:
            return cls.linear()
        if kind == RBF:
            return cls.rbf(d.get("gamma", 1.0))
        if kind == RIGID:
            return cls.rigid(d.get("h_r", 0))
        if kind == DEFORMABLE:
            return cls.deformable(d.get("h_r", 0), d.get("h_l", 0), d.get("lambda", 0.0))
        raise ValueError(f"unknown measure kind {kind!r}")


def _vec(x):
    if isinstance(x, FeatureGrid):
        return x.flat()
    return np.asarray(x, dtype=np.float64).reshape(-1)


def _cells(g):
    if isinstance(g, FeatureGrid):
        return g.cells
    arr = np.asarray(g, dtype=np.float64)
    if arr.ndim != 3:
        raise RepresentationMismatch("grid measures need (H, W, cell_dim) cell arrays")
    return np.ascontiguousarray(arr)


def eval_linear(x, y):
    x, y = _vec(x), _vec(y)
    if x.shape != y.shape:
        raise DimensionMismatch(f"dimensions {x.shape[0]} and {y.shape[0]} differ")
    return float(x @ y)


def eval_rbf(x, y, gamma=1.0):
    x, y = _vec(x), _vec(y)
    if x.shape != y.shape:
        raise DimensionMismatch(f"dimensions {x.shape[0]} and {y.shape[0]} differ")
    diff = x - y
    return float(np.exp(-gamma * (diff @ diff)))


def eval_deformable(gx, gy, h_r, h_l, lam=0.0, backend=None):
    """max over global shifts of the sum over cells of the best local match."""
    a, b = _cells(gx), _cells(gy)
    if a.shape[2] != b.shape[2]:
        raise CellDimMismatch(f"cell dims {a.shape[2]} and {b.shape[2]} differ")
    out = _backend.get(backend).grid_gram(a[None], b[None], int(h_r), int(h_l), float(lam))
    return float(out[0, 0])


def eval_rigid(gx, gy, h_r, backend=None):
    """Maximal zero-padded cross-correlation over shifts |z| <= h_r cells."""
    return eval_deformable(gx, gy, h_r, 0, 0.0, backend)


def evaluate(measure, x, y):
    if measure.kind == LINEAR:
        return eval_linear(x, y)
    if measure.kind == RBF:
        return eval_rbf(x, y, measure.gamma)
    if measure.kind == RIGID:
        return eval_rigid(x, y, measure.h_r)
    return eval_deformable(x, y, measure.h_r, measure.h_l, measure.lam)


@dataclass
class SimilarityMatrix:
    values: np.ndarray
    row_ids: list
    col_ids: list


def as_vectors(items):
    """Stack exemplars as rows of an (n, d) array (grids are flattened)."""
    if isinstance(items, np.ndarray):
        arr = items.astype(np.float64, copy=False)
        return arr.reshape(arr.shape[0], -1) if arr.ndim != 2 else arr
    rows = [_vec(x) for x in items]
    if not rows:
        return np.zeros((0, 0))
    if len({r.shape for r in rows}) != 1:
        raise DimensionMismatch("exemplars have different dimensions")
    return np.stack(rows)


def as_grids(items):
    """Stack exemplars as an (n, H, W, d) array, or a list if sizes differ."""
    if isinstance(items, np.ndarray):
        if items.ndim != 4:
            raise RepresentationMismatch("grid measures need (n, H, W, cell_dim) input")
        return np.ascontiguousarray(items, dtype=np.float64)
    cells = [_cells(g) for g in items]
    if not cells:
        return np.zeros((0, 1, 1, 1))
    if len({c.shape for c in cells}) == 1:
        return np.stack(cells)
    return cells


def _cell_dim(stack):
    if isinstance(stack, list):
        dims = {c.shape[-1] for c in stack}
        if len(dims) > 1:
            raise CellDimMismatch(f"cell dims differ: {sorted(dims)}")
        return dims.pop() if dims else None
    return stack.shape[-1] if len(stack) else None


def _grid_block(kernels, A, B, measure):
    h_l = measure.h_l if measure.kind == DEFORMABLE else 0
    lam = measure.lam if measure.kind == DEFORMABLE else 0.0
    if isinstance(A, list) or isinstance(B, list):
        out = np.empty((len(A), len(B)))
        for i, a in enumerate(A):
            for j, b in enumerate(B):
                out[i, j] = kernels.grid_gram(np.ascontiguousarray(a)[None],
                                              np.ascontiguousarray(b)[None],
                                              measure.h_r, h_l, lam)[0, 0]
        return out
    return kernels.grid_gram(A, B, measure.h_r, h_l, lam)


def _rbf_block(R, C, gamma):
    out = np.empty((R.shape[0], C.shape[0]))
    step = max(1, _RBF_CHUNK // max(1, C.shape[0] * max(1, R.shape[1])))
    for s in range(0, R.shape[0], step):
        diff = R[s:s + step, None, :] - C[None, :, :]
        out[s:s + step] = np.exp(-gamma * np.einsum("ijk,ijk->ij", diff, diff))
    return out


def gram_values(measure, rows, cols, backend=None, n_threads=None):
    """values[i, j] = measure(rows[i], cols[j]) as a plain array."""
    kernels = _backend.get(backend)
    if measure.on_grids:
        A, B = as_grids(rows), as_grids(cols)
        dims = {_cell_dim(A), _cell_dim(B)} - {None}
        if len(dims) > 1:
            raise CellDimMismatch(f"cell dims differ: {sorted(dims)}")
        threads = n_threads or _backend.n_threads()
        nB = len(B)
        if threads <= 1 or nB < 2 * threads or isinstance(B, list):
            return _grid_block(kernels, A, B, measure)
        bounds = np.linspace(0, nB, threads + 1).astype(int)
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda ab: _grid_block(kernels, A, B[ab[0]:ab[1]], measure),
                                  zip(bounds[:-1], bounds[1:])))
        return np.concatenate(parts, axis=1)

    R, C = as_vectors(rows), as_vectors(cols)
    if R.size and C.size and R.shape[1] != C.shape[1]:
        raise DimensionMismatch(f"dimensions {R.shape[1]} and {C.shape[1]} differ")
    if measure.kind == LINEAR:
        return R @ C.T
    return _rbf_block(R, C, measure.gamma)


def gram(measure, rows, cols, row_ids=None, col_ids=None, backend=None):
    values = gram_values(measure, rows, cols, backend=backend)
    return SimilarityMatrix(
        values,
        list(range(values.shape[0])) if row_ids is None else list(row_ids),
        list(range(values.shape[1])) if col_ids is None else list(col_ids),
    )

"""HOG-style cell grids and global center/scale normalization.

The cell descriptor is 31-dimensional: 18 contrast-sensitive orientation
bins, 9 contrast-insensitive bins and 4 gradient-energy (texture) features,
each computed against the four 2x2 blocks containing the cell.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, DimensionMismatch, DimensionNotDivisible

HOG_CELL_DIM = 31
N_ORIENT = 9
BLOCK_EPS = 1e-4
TRUNCATION = 0.2

_ANGLES = np.arange(N_ORIENT) * np.pi / N_ORIENT
_UU = np.cos(_ANGLES)
_VV = np.sin(_ANGLES)


@dataclass
class FeatureGrid:
    """H_cells x W_cells grid of descriptors; outside the grid reads as zero."""

    cells: np.ndarray

    def __post_init__(self):
        self.cells = np.ascontiguousarray(self.cells, dtype=np.float64)
        if self.cells.ndim != 3 or min(self.cells.shape[:2]) < 1:
            raise DimensionMismatch("a FeatureGrid needs shape (H, W, cell_dim) with H, W >= 1")

    @property
    def cell_dim(self):
        return self.cells.shape[2]

    @property
    def shape(self):
        return self.cells.shape[:2]

    def cell(self, y, x):
        H, W = self.shape
        if 0 <= y < H and 0 <= x < W:
            return self.cells[y, x]
        return np.zeros(self.cell_dim)

    def flat(self):
        return self.cells.reshape(-1)


def _as_float_image(image):
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3:
        raise DimensionMismatch("image must be HxW or HxWxC")
    return img


def _oriented_histograms(img, cell_size):
    H, W, _ = img.shape
    xs = np.arange(W)
    ys = np.arange(H)
    # clamped central differences
    dx = img[:, np.minimum(xs + 1, W - 1)] - img[:, np.maximum(xs - 1, 0)]
    dy = img[np.minimum(ys + 1, H - 1)] - img[np.maximum(ys - 1, 0)]
    mag2 = dx * dx + dy * dy
    best = np.argmax(mag2, axis=2)[..., None]
    dx = np.take_along_axis(dx, best, axis=2)[..., 0]
    dy = np.take_along_axis(dy, best, axis=2)[..., 0]
    mag = np.sqrt(np.take_along_axis(mag2, best, axis=2)[..., 0])

    dots = dx[..., None] * _UU + dy[..., None] * _VV
    o = np.argmax(np.abs(dots), axis=2)
    negative = np.take_along_axis(dots, o[..., None], axis=2)[..., 0] < 0
    orient = np.where(negative, o + N_ORIENT, o)

    Hc, Wc = H // cell_size, W // cell_size
    cell_id = (ys // cell_size)[:, None] * Wc + (xs // cell_size)[None, :]
    flat_bin = (cell_id * 2 * N_ORIENT + orient).ravel()
    hist = np.bincount(flat_bin, weights=mag.ravel(), minlength=Hc * Wc * 2 * N_ORIENT)
    return hist.reshape(Hc, Wc, 2 * N_ORIENT)


def compute_hog_grid(image, cell_size=8):
    """31-dim HOG cells for an image whose sides are multiples of cell_size."""
    img = _as_float_image(image)
    H, W, _ = img.shape
    if cell_size < 1 or H % cell_size or W % cell_size:
        raise DimensionNotDivisible(f"image {H}x{W} not divisible by cell size {cell_size}")
    hist = _oriented_histograms(img, cell_size)
    Hc, Wc, _ = hist.shape

    energy = np.sum((hist[..., :N_ORIENT] + hist[..., N_ORIENT:]) ** 2, axis=2)
    padded = np.zeros((Hc + 2, Wc + 2))
    padded[1:-1, 1:-1] = energy
    blocks = padded[:-1, :-1] + padded[1:, :-1] + padded[:-1, 1:] + padded[1:, 1:]
    inv = 1.0 / np.sqrt(blocks + BLOCK_EPS)
    # the four blocks containing cell (y, x), shape (Hc, Wc, 4)
    norms = np.stack([inv[:-1, :-1], inv[:-1, 1:], inv[1:, :-1], inv[1:, 1:]], axis=-1)

    sensitive = np.minimum(hist[..., :, None] * norms[..., None, :], TRUNCATION)
    folded = hist[..., :N_ORIENT] + hist[..., N_ORIENT:]
    insensitive = np.minimum(folded[..., :, None] * norms[..., None, :], TRUNCATION)

    cells = np.empty((Hc, Wc, HOG_CELL_DIM))
    cells[..., :2 * N_ORIENT] = 0.5 * sensitive.sum(axis=3)
    cells[..., 2 * N_ORIENT:3 * N_ORIENT] = 0.5 * insensitive.sum(axis=3)
    cells[..., 3 * N_ORIENT:] = 0.2357 * sensitive.sum(axis=2)
    return FeatureGrid(cells)


def compute_hog_grids(images, cell_size=8):
    """Stacked cell arrays, shape (n, H/cell, W/cell, 31), in input order."""
    images = list(images) if not isinstance(images, np.ndarray) else images
    if len(images) == 0:
        return np.zeros((0, 1, 1, HOG_CELL_DIM))
    return np.stack([compute_hog_grid(im, cell_size).cells for im in images])


@dataclass
class NormalizationStats:
    """Centering vector and the inverse average centered l2 norm."""

    mean: np.ndarray
    scale: float

    kind = "besvm"

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.scale = float(self.scale)
        if not self.scale > 0:
            raise DegenerateInput("scale must be positive")

    def apply(self, v):
        return apply_center_scale(self, v)

    def to_dict(self):
        return {"kind": self.kind, "mean": self.mean.tolist(), "scale": self.scale}


@dataclass
class ZScoreStats:
    mean: np.ndarray
    inv_std: np.ndarray

    kind = "zscore"

    def apply(self, v):
        v = np.asarray(v, dtype=np.float64)
        _check_dim(v, self.mean)
        return (v - self.mean) * self.inv_std

    def to_dict(self):
        return {"kind": self.kind, "mean": self.mean.tolist(), "inv_std": self.inv_std.tolist()}


@dataclass
class IdentityStats:
    dim: int

    kind = "unnorm"

    def apply(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.shape[-1] != self.dim:
            raise DimensionMismatch(f"expected dimension {self.dim}, got {v.shape[-1]}")
        return v

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim}


def _check_dim(v, mean):
    if v.shape[-1] != mean.shape[0]:
        raise DimensionMismatch(f"expected dimension {mean.shape[0]}, got {v.shape[-1]}")


def fit_center_scale(vectors):
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 2:
        raise DegenerateInput("need at least two vectors")
    mean = X.mean(axis=0)
    avg_norm = np.linalg.norm(X - mean, axis=1).mean()
    if not avg_norm > 0:
        raise DegenerateInput("all vectors identical")
    return NormalizationStats(mean, 1.0 / avg_norm)


def apply_center_scale(stats, v):
    """scale * (v - mean); works on a single vector or on rows."""
    v = np.asarray(v, dtype=np.float64)
    _check_dim(v, stats.mean)
    return stats.scale * (v - stats.mean)


def fit_zscore(vectors):
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 2:
        raise DegenerateInput("need at least two vectors")
    std = X.std(axis=0)
    # constant dimensions are only centered
    inv = np.where(std > 0, 1.0 / np.where(std > 0, std, 1.0), 1.0)
    return ZScoreStats(X.mean(axis=0), inv)


NORMALIZATION_MODES = ("unnorm", "zscore", "besvm")


def fit_normalization(mode, vectors):
    mode = normalize_mode_name(mode)
    if mode == "besvm":
        return fit_center_scale(vectors)
    if mode == "zscore":
        return fit_zscore(vectors)
    X = np.asarray(vectors)
    return IdentityStats(X.shape[-1] if X.ndim > 1 else 1)


def normalize_mode_name(mode):
    key = str(mode).lower().replace("-", "").replace("_", "")
    aliases = {"unnorm": "unnorm", "none": "unnorm", "zscore": "zscore", "besvm": "besvm"}
    if key not in aliases:
        raise ValueError(f"unknown normalization {mode!r}; use Unnorm, Z-Score or BE-SVM")
    return aliases[key]


def stats_from_dict(d):
    kind = d["kind"]
    if kind == "besvm":
        return NormalizationStats(np.array(d["mean"]), d["scale"])
    if kind == "zscore":
        return ZScoreStats(np.array(d["mean"]), np.array(d["inv_std"]))
    if kind == "unnorm":
        return IdentityStats(int(d["dim"]))
    raise ValueError(f"unknown stats kind {kind!r}")

"""Data ingestion (CIFAR-10 binary batches, CSV) and synthetic generators."""
import csv
import os
from dataclasses import dataclass

import numpy as np

from .errors import DataError, FileSizeMismatch, LabelOutOfRange, SizeSumMismatch

CIFAR_SIDE = 32
CIFAR_PIXELS = 3 * CIFAR_SIDE * CIFAR_SIDE
CIFAR_RECORD = 1 + CIFAR_PIXELS
CIFAR_CLASSES = 10


@dataclass
class LabeledImageSet:
    """images: (n, height, width, 3) uint8; labels: (n,) int."""

    images: np.ndarray
    labels: np.ndarray
    class_count: int = CIFAR_CLASSES

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.uint8)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 4 or self.images.shape[0] != self.labels.shape[0]:
            raise DataError("images and labels disagree in count")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise LabelOutOfRange("label outside 0..%d" % (self.class_count - 1))

    def __len__(self):
        return len(self.labels)


@dataclass
class LabeledPointSet:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim == 1:
            self.points = self.points[:, None]
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.points.shape[0] != self.labels.shape[0]:
            raise DataError("row count %d != label count %d" % (self.points.shape[0], self.labels.shape[0]))
        if self.points.shape[1] < 1:
            raise DataError("points need at least one column")

    def __len__(self):
        return len(self.labels)


@dataclass
class FoldSplit:
    fold_assignments: np.ndarray

    @property
    def n_folds(self):
        return int(self.fold_assignments.max()) + 1 if self.fold_assignments.size else 0

    def indices(self, fold):
        return np.flatnonzero(self.fold_assignments == fold)

    def train_test(self, fold):
        test = self.fold_assignments == fold
        return np.flatnonzero(~test), np.flatnonzero(test)


def load_cifar10_batch(path, expected_count=None):
    """Read a CIFAR-10 binary batch.

    Each record is one label byte followed by 3072 pixel bytes stored
    channel-planar (R, G, B), each plane row-major 32x32.
    """
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size % CIFAR_RECORD:
        raise FileSizeMismatch(
            f"{path}: {raw.size} bytes is not a multiple of the {CIFAR_RECORD}-byte record")
    count = raw.size // CIFAR_RECORD
    if expected_count is not None and count != expected_count:
        raise FileSizeMismatch(f"{path}: holds {count} records, expected {expected_count}")
    records = raw.reshape(count, CIFAR_RECORD)
    labels = records[:, 0].astype(np.int64)
    if labels.size and labels.max() >= CIFAR_CLASSES:
        raise LabelOutOfRange(f"{path}: label {labels.max()} out of range 0..9")
    images = records[:, 1:].reshape(count, 3, CIFAR_SIDE, CIFAR_SIDE).transpose(0, 2, 3, 1)
    return LabeledImageSet(np.ascontiguousarray(images), labels)


def write_cifar10_batch(path, image_set):
    images = np.asarray(image_set.images, dtype=np.uint8)
    if images.shape[1:] != (CIFAR_SIDE, CIFAR_SIDE, 3):
        raise DataError("CIFAR-10 layout needs 32x32x3 images")
    out = np.empty((len(image_set), CIFAR_RECORD), dtype=np.uint8)
    out[:, 0] = image_set.labels
    out[:, 1:] = images.transpose(0, 3, 1, 2).reshape(len(image_set), CIFAR_PIXELS)
    out.tofile(path)


def load_cifar10(paths):
    """Concatenate several batch files, preserving file order."""
    sets = [load_cifar10_batch(p) for p in paths]
    if not sets:
        return LabeledImageSet(np.zeros((0, CIFAR_SIDE, CIFAR_SIDE, 3), np.uint8), np.zeros(0, np.int64))
    return LabeledImageSet(np.concatenate([s.images for s in sets]),
                           np.concatenate([s.labels for s in sets]))


def load_csv(path):
    """One sample per line: label, then features (comma separated)."""
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    labels, rows = [], []
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), 1):
            if not rec or all(not f.strip() for f in rec):
                continue
            try:
                labels.append(int(rec[0]))
                rows.append([float(v) for v in rec[1:]])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no samples")
    if len({len(r) for r in rows}) != 1:
        raise DataError(f"{path}: ragged rows")
    return LabeledPointSet(np.array(rows), np.array(labels))


def make_two_rings(n_per_class, radii=(0.5, 1.0), noise_sigma=0.05, seed=0):
    """Two concentric noisy rings; class 0 on radius r1, class 1 on r2.

    Samples alternate between classes so that contiguous folds stay
    balanced.
    """
    r1, r2 = radii
    if n_per_class < 1 or not r1 < r2 or noise_sigma < 0:
        raise ValueError("need n_per_class >= 1, r1 < r2 and noise_sigma >= 0")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2 * np.pi, size=2 * n_per_class)
    labels = np.tile([0, 1], n_per_class)
    radius = np.where(labels == 0, r1, r2)
    points = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    if noise_sigma > 0:
        points = points + rng.normal(0.0, noise_sigma, size=points.shape)
    return LabeledPointSet(points, labels)


def make_blobs(n_per_class, centers, sigma=0.1, seed=0):
    """Isotropic Gaussian blobs, classes interleaved."""
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    k = len(centers)
    rng = np.random.default_rng(seed)
    labels = np.tile(np.arange(k), n_per_class)
    points = centers[labels] + rng.normal(0.0, sigma, size=(len(labels), centers.shape[1]))
    return LabeledPointSet(points, labels)


def make_textures(n_images, n_classes=10, size=32, seed=0):
    """Synthetic grayscale-ish RGB textures with class-dependent orientation.

    Each class owns a dominant grating orientation; samples add a random
    phase, a random translated blob and pixel noise.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    labels = np.arange(n_images) % n_classes
    images = np.empty((n_images, size, size, 3), dtype=np.uint8)
    for i, c in enumerate(labels):
        angle = np.pi * c / n_classes + rng.normal(0, 0.05)
        freq = rng.uniform(0.25, 0.6)
        phase = rng.uniform(0, 2 * np.pi)
        img = np.sin(freq * (np.cos(angle) * xx + np.sin(angle) * yy) + phase)
        cy, cx = rng.uniform(4, size - 4, size=2)
        img += 1.5 * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * rng.uniform(2, 5) ** 2))
        img += rng.normal(0, 0.2, size=img.shape)
        img = (img - img.min()) / (np.ptp(img) + 1e-12)
        tint = rng.uniform(0.6, 1.0, size=3)
        images[i] = np.clip(255 * img[..., None] * tint, 0, 255).astype(np.uint8)
    return LabeledImageSet(images, labels, class_count=max(n_classes, 1))


def split_folds(n, fold_sizes):
    """Contiguous fold assignment: the first fold_sizes[0] samples go to fold 0, ..."""
    fold_sizes = [int(s) for s in fold_sizes]
    if sum(fold_sizes) != n or any(s < 0 for s in fold_sizes):
        raise SizeSumMismatch(f"fold sizes {fold_sizes} do not sum to {n}")
    return FoldSplit(np.repeat(np.arange(len(fold_sizes)), fold_sizes))


def even_fold_sizes(n, n_folds):
    base, extra = divmod(n, n_folds)
    return [base + (1 if f < extra else 0) for f in range(n_folds)]

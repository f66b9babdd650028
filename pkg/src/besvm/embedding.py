"""Explicit feature spaces built from similarities to a basis set.

``measures`` arguments accept either bare ``SimilarityMeasure`` objects or
``(representation_key, measure)`` pairs. With keys, sample and basis
payloads are dicts mapping each key to a stacked array, which lets one
shared basis carry several representations (e.g. HOG at two cell sizes).
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AsymmetricInput,
    DegenerateBlock,
    DegenerateCovariance,
    DegenerateInput,
    DimensionMismatch,
    NegativeEigenvalueBeyondTol,
    RepresentationMismatch,
)
from .features import fit_normalization, stats_from_dict
from .similarity import SimilarityMeasure, gram_values

FORMAT_VERSION = 1
SPECTRUM_FIXES = ("clip", "flip", "shift", "square")
SYMMETRY_TOL = 1e-9
EIG_TOL = 1e-10


def _resolve(measures):
    out = []
    for m in measures:
        if isinstance(m, SimilarityMeasure):
            out.append((None, m))
        else:
            key, measure = m
            out.append((key, measure))
    return out


def _select(payload, key):
    if key is None:
        if isinstance(payload, dict):
            if len(payload) != 1:
                raise RepresentationMismatch("payload has several representations; name one")
            return next(iter(payload.values()))
        return payload
    if not isinstance(payload, dict) or key not in payload:
        raise RepresentationMismatch(f"no representation {key!r} in payload")
    return payload[key]


def _take(payload, idx):
    if isinstance(payload, dict):
        return {k: np.asarray(v)[idx] for k, v in payload.items()}
    return np.asarray(payload)[idx]


def _length(payload):
    if isinstance(payload, dict):
        lengths = {len(v) for v in payload.values()}
        if len(lengths) != 1:
            raise RepresentationMismatch("representations disagree in sample count")
        return lengths.pop()
    return len(payload)


@dataclass
class BasisSet:
    """Ordered basis exemplars shared by every measure of an embedding."""

    labels: np.ndarray
    payload: object
    indices: np.ndarray = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.indices is None:
            self.indices = np.full(len(self.labels), -1, dtype=np.int64)
        self.indices = np.asarray(self.indices, dtype=np.int64)
        if _length(self.payload) != len(self.labels) or len(self.indices) != len(self.labels):
            raise DimensionMismatch("basis labels, indices and payload disagree in length")

    @classmethod
    def from_indices(cls, payload, labels, indices):
        indices = np.asarray(indices, dtype=np.int64)
        return cls(np.asarray(labels)[indices], _take(payload, indices), indices)

    def __len__(self):
        return len(self.labels)

    @property
    def per_class_counts(self):
        classes, counts = np.unique(self.labels, return_counts=True)
        return dict(zip(classes.tolist(), counts.tolist()))

    def to_dict(self):
        if isinstance(self.payload, dict):
            payload = {k: {"shape": list(np.shape(v)), "data": np.asarray(v, dtype=np.float64).ravel().tolist()}
                       for k, v in self.payload.items()}
        else:
            v = np.asarray(self.payload, dtype=np.float64)
            payload = {"shape": list(v.shape), "data": v.ravel().tolist()}
        return {
            "version": FORMAT_VERSION,
            "indices": self.indices.tolist(),
            "labels": self.labels.tolist(),
            "keyed": isinstance(self.payload, dict),
            "payload": payload,
        }

    @classmethod
    def from_dict(cls, d):
        def unpack(p):
            return np.array(p["data"], dtype=np.float64).reshape(p["shape"])

        if d["keyed"]:
            payload = {k: unpack(v) for k, v in d["payload"].items()}
        else:
            payload = unpack(d["payload"])
        return cls(np.array(d["labels"]), payload, np.array(d["indices"]))


@dataclass
class EmbeddedDataset:
    matrix: np.ndarray
    labels: np.ndarray
    offsets: list
    stats: list = field(default_factory=list)

    @property
    def n_blocks(self):
        return len(self.offsets)

    def block(self, m):
        start, stop = self.offsets[m]
        return self.matrix[:, start:stop]


def raw_embedding(basis, measures, samples):
    """Unnormalized empirical maps as rows, plus per-measure column offsets."""
    blocks, offsets, start = [], [], 0
    for key, measure in _resolve(measures):
        B = _select(basis.payload, key)
        X = _select(samples, key)
        # rows = basis (fixed side), cols = samples (shifted side)
        blocks.append(gram_values(measure, B, X).T)
        offsets.append((start, start + len(basis)))
        start += len(basis)
    n = _length(samples)
    matrix = np.concatenate(blocks, axis=1) if blocks else np.zeros((n, 0))
    return matrix, offsets


def empirical_map(basis, measures, x):
    """[s_m(b_1, x), ..., s_m(b_B, x)] concatenated over measures."""
    if isinstance(x, dict):
        single = {k: np.asarray(v)[None] for k, v in x.items()}
    else:
        single = np.asarray(x, dtype=np.float64)[None]
    matrix, _ = raw_embedding(basis, measures, single)
    return matrix[0]


def fit_embedding_normalizer(mapped, offsets, mode="besvm"):
    """One set of normalization stats per measure block."""
    mapped = np.asarray(mapped, dtype=np.float64)
    stats = []
    for m, (start, stop) in enumerate(offsets):
        try:
            stats.append(fit_normalization(mode, mapped[:, start:stop]))
        except DegenerateInput as exc:
            raise DegenerateBlock(f"measure block {m}: {exc}") from None
    return stats


def apply_embedding_normalizer(mapped, offsets, stats):
    mapped = np.asarray(mapped, dtype=np.float64)
    out = np.empty_like(mapped)
    for (start, stop), s in zip(offsets, stats):
        out[:, start:stop] = s.apply(mapped[:, start:stop])
    return out


def embed_dataset(basis, measures, samples, labels=None, stats=None, mode="besvm"):
    """Normalized embedding. Without ``stats`` they are fit on ``samples``."""
    raw, offsets = raw_embedding(basis, measures, samples)
    if stats is None:
        stats = fit_embedding_normalizer(raw, offsets, mode)
    matrix = apply_embedding_normalizer(raw, offsets, stats)
    labels = np.zeros(len(raw), dtype=np.int64) if labels is None else np.asarray(labels)
    return EmbeddedDataset(matrix, labels, offsets, list(stats))


def embedding_stats_to_dict(stats):
    return [s.to_dict() for s in stats]


def embedding_stats_from_dict(items):
    return [stats_from_dict(d) for d in items]


def _check_symmetric(A):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise AsymmetricInput("matrix must be square")
    if A.size and np.max(np.abs(A - A.T)) > SYMMETRY_TOL:
        raise AsymmetricInput("matrix is not symmetric")
    return A


def _fixed_eigenvalues(lam, mode):
    mode = mode.lower()
    if mode == "clip":
        return np.maximum(lam, 0.0)
    if mode == "flip":
        return np.abs(lam)
    if mode == "shift":
        return lam + max(0.0, -lam.min()) if lam.size else lam
    if mode == "square":
        return lam * lam
    raise ValueError(f"unknown spectrum fix {mode!r}; use one of {SPECTRUM_FIXES}")


def spectrum_fix(A, mode="clip"):
    """Make a symmetric matrix PSD by editing its eigenvalues."""
    A = _check_symmetric(A)
    if mode.lower() == "square":
        return A.T @ A
    lam, V = np.linalg.eigh((A + A.T) / 2)
    return (V * _fixed_eigenvalues(lam, mode)) @ V.T


def _inv_sqrt_from_eigen(lam, V, tol):
    top = np.max(np.abs(lam)) if lam.size else 0.0
    if lam.size and lam.min() < -tol * top:
        raise NegativeEigenvalueBeyondTol(f"eigenvalue {lam.min():.3g} below -{tol:g} * {top:.3g}")
    keep = lam > tol * top
    scale = np.zeros_like(lam)
    scale[keep] = 1.0 / np.sqrt(lam[keep])
    return (V * scale) @ V.T


def inv_sqrt_psd(A, tol=EIG_TOL):
    """Pseudo-inverse square root; eigenvalues below tol * max are dropped."""
    A = _check_symmetric(A)
    lam, V = np.linalg.eigh((A + A.T) / 2)
    return _inv_sqrt_from_eigen(lam, V, tol)


def nystrom_embed(K_mm, K_mn, fix="clip", tol=EIG_TOL):
    """Psi = K_mm^(-1/2) K_mn after symmetrizing and fixing the spectrum of K_mm."""
    K_mm = np.asarray(K_mm, dtype=np.float64)
    K_mn = np.asarray(K_mn, dtype=np.float64)
    if K_mm.ndim != 2 or K_mm.shape[0] != K_mm.shape[1] or K_mn.shape[0] != K_mm.shape[0]:
        raise DimensionMismatch("K_mm must be m x m and K_mn must have m rows")
    lam, V = np.linalg.eigh((K_mm + K_mm.T) / 2)
    lam = _fixed_eigenvalues(lam, fix)
    return _inv_sqrt_from_eigen(lam, V, tol) @ K_mn


def covariance_normalizer_embed(K_mn, tol=EIG_TOL):
    """Whiten with the covariance of the columns of K_mn instead of K_mm."""
    K_mn = np.atleast_2d(np.asarray(K_mn, dtype=np.float64))
    if K_mn.shape[1] < 2:
        raise DegenerateCovariance("need at least two columns")
    cov = np.atleast_2d(np.cov(K_mn))
    if not np.any(np.abs(cov) > 0):
        raise DegenerateCovariance("all columns are identical")
    return inv_sqrt_psd(cov, tol) @ K_mn

"""Estimators that chain feature normalization, basis selection, embedding
and training. Each one serializes to a versioned JSON-ready dict.

Payloads are either one stacked array (vectors ``(n, d)`` or grids
``(n, H, W, c)``) or a dict of such arrays keyed by representation name.
"""
import time

import numpy as np

from .basis import select_basis
from .embedding import (
    BasisSet,
    apply_embedding_normalizer,
    embedding_stats_from_dict,
    embedding_stats_to_dict,
    fit_embedding_normalizer,
    nystrom_embed,
    raw_embedding,
    spectrum_fix,
)
from .features import fit_center_scale, fit_normalization, stats_from_dict
from .similarity import SimilarityMeasure, gram_values
from .solver import (
    MODEL_VERSION,
    SQUARED_HINGE,
    KernelModel,
    LinearModel,
    train_one_vs_one,
    train_one_vs_rest,
)


def _keys(payload):
    return list(payload) if isinstance(payload, dict) else [None]


def _get(payload, key):
    return payload if key is None else payload[key]


def _rebuild(payload, parts):
    if isinstance(payload, dict):
        return parts
    return parts[None]


def fit_feature_norm(payload, mode):
    """Per representation: fit stats on flattened training samples."""
    stats = {}
    for key in _keys(payload):
        X = np.asarray(_get(payload, key), dtype=np.float64)
        stats[key] = fit_normalization(mode, X.reshape(len(X), -1))
    return stats


def apply_feature_norm(payload, stats):
    parts = {}
    for key in _keys(payload):
        X = np.asarray(_get(payload, key), dtype=np.float64)
        parts[key] = stats[key].apply(X.reshape(len(X), -1)).reshape(X.shape)
    return _rebuild(payload, parts)


def _stats_dict(stats):
    return {("" if k is None else k): s.to_dict() for k, s in stats.items()}


def _stats_from(d):
    return {(None if k == "" else k): stats_from_dict(v) for k, v in d.items()}


def _measures_to_list(measures):
    out = []
    for m in measures:
        if isinstance(m, SimilarityMeasure):
            out.append({"key": None, "measure": m.to_dict()})
        else:
            out.append({"key": m[0], "measure": m[1].to_dict()})
    return out


def _measures_from_list(items):
    out = []
    for it in items:
        m = SimilarityMeasure.from_dict(it["measure"])
        out.append(m if it["key"] is None else (it["key"], m))
    return out


def _payload_to_json(payload):
    def pack(a):
        a = np.asarray(a, dtype=np.float64)
        return {"shape": list(a.shape), "data": a.ravel().tolist()}

    if isinstance(payload, dict):
        return {"keyed": True, "items": {k: pack(v) for k, v in payload.items()}}
    return {"keyed": False, "items": pack(payload)}


def _payload_from_json(d):
    def unpack(p):
        return np.array(p["data"], dtype=np.float64).reshape(p["shape"])

    if d["keyed"]:
        return {k: unpack(v) for k, v in d["items"].items()}
    return unpack(d["items"])


class BESVMClassifier:
    """Linear one-vs-rest SVM on normalized empirical kernel maps."""

    method = "besvm"

    def __init__(self, measures, per_class=10, basis_strategy="indx", C=1.0,
                 feature_norm="besvm", map_norm="besvm", bias=False, seed=0,
                 epsilon=1e-6, kmedoids_measure=0, loss=SQUARED_HINGE):
        self.measures = list(measures)
        self.per_class = per_class
        self.basis_strategy = basis_strategy
        self.C = C
        self.feature_norm = feature_norm
        self.map_norm = map_norm
        self.bias = bias
        self.seed = seed
        self.epsilon = epsilon
        self.kmedoids_measure = kmedoids_measure
        self.loss = loss
        self.timings = {}

    def _similarity_for_kmedoids(self, X):
        m = self.measures[self.kmedoids_measure]
        key, measure = (None, m) if isinstance(m, SimilarityMeasure) else m
        data = _get(X, key) if key is not None or not isinstance(X, dict) else next(iter(X.values()))
        S = gram_values(measure, data, data)
        return (S + S.T) / 2

    def fit(self, X, y):
        y = np.asarray(y)
        t0 = time.perf_counter()
        self.feature_stats_ = fit_feature_norm(X, self.feature_norm)
        Xn = apply_feature_norm(X, self.feature_stats_)
        S = self._similarity_for_kmedoids(Xn) if self.basis_strategy.lower().startswith("km") else None
        idx = select_basis(self.basis_strategy, y, self.per_class, seed=self.seed, similarity=S)
        self.basis_ = BasisSet.from_indices(Xn, y, idx)
        t1 = time.perf_counter()
        raw, self.offsets_ = raw_embedding(self.basis_, self.measures, Xn)
        self.map_stats_ = fit_embedding_normalizer(raw, self.offsets_, self.map_norm)
        E = apply_embedding_normalizer(raw, self.offsets_, self.map_stats_)
        t2 = time.perf_counter()
        self.model_ = train_one_vs_rest(E, y, C=self.C, bias=self.bias, epsilon=self.epsilon,
                                        loss=self.loss, seed=self.seed)
        t3 = time.perf_counter()
        self.timings = {"basis_s": t1 - t0, "embed_s": t2 - t1, "solve_s": t3 - t2}
        return self

    def transform(self, X):
        Xn = apply_feature_norm(X, self.feature_stats_)
        raw, _ = raw_embedding(self.basis_, self.measures, Xn)
        return apply_embedding_normalizer(raw, self.offsets_, self.map_stats_)

    def decision_function(self, X):
        return self.model_.decision_function(self.transform(X))

    def predict(self, X):
        return self.model_.predict(self.transform(X))

    @property
    def n_parameters(self):
        return int(self.model_.weights.size)

    @property
    def n_supporting(self):
        return len(self.basis_)

    def to_dict(self):
        return {
            "version": MODEL_VERSION,
            "method": self.method,
            "params": {"per_class": self.per_class, "basis_strategy": self.basis_strategy, "C": self.C,
                       "feature_norm": self.feature_norm, "map_norm": self.map_norm, "bias": self.bias,
                       "seed": self.seed, "epsilon": self.epsilon, "loss": self.loss},
            "measures": _measures_to_list(self.measures),
            "feature_stats": _stats_dict(self.feature_stats_),
            "basis": self.basis_.to_dict(),
            "offsets": [list(o) for o in self.offsets_],
            "map_stats": embedding_stats_to_dict(self.map_stats_),
            "model": self.model_.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        est = cls(_measures_from_list(d["measures"]), **d["params"])
        est.feature_stats_ = _stats_from(d["feature_stats"])
        est.basis_ = BasisSet.from_dict(d["basis"])
        est.offsets_ = [tuple(o) for o in d["offsets"]]
        est.map_stats_ = embedding_stats_from_dict(d["map_stats"])
        est.model_ = LinearModel.from_dict(d["model"])
        return est


class LinearSVMClassifier:
    """One-vs-rest linear SVM on the (flattened) raw features."""

    method = "linear"

    def __init__(self, C=1.0, feature_norm="besvm", bias=True, seed=0, epsilon=1e-6,
                 loss=SQUARED_HINGE):
        self.C = C
        self.feature_norm = feature_norm
        self.bias = bias
        self.seed = seed
        self.epsilon = epsilon
        self.loss = loss
        self.timings = {}

    @staticmethod
    def _flat(X):
        if isinstance(X, dict):
            return np.hstack([np.asarray(X[k], dtype=np.float64).reshape(len(X[k]), -1) for k in sorted(X)])
        X = np.asarray(X, dtype=np.float64)
        return X.reshape(len(X), -1)

    def fit(self, X, y):
        t0 = time.perf_counter()
        F = self._flat(X)
        self.feature_stats_ = fit_normalization(self.feature_norm, F)
        self.model_ = train_one_vs_rest(self.feature_stats_.apply(F), y, C=self.C, bias=self.bias,
                                        epsilon=self.epsilon, loss=self.loss, seed=self.seed)
        self.timings = {"solve_s": time.perf_counter() - t0}
        return self

    def predict(self, X):
        return self.model_.predict(self.feature_stats_.apply(self._flat(X)))

    @property
    def n_parameters(self):
        return int(self.model_.weights.size + self.model_.biases.size)

    @property
    def n_supporting(self):
        return 0

    def to_dict(self):
        return {
            "version": MODEL_VERSION,
            "method": self.method,
            "params": {"C": self.C, "feature_norm": self.feature_norm, "bias": self.bias,
                       "seed": self.seed, "epsilon": self.epsilon, "loss": self.loss},
            "feature_stats": self.feature_stats_.to_dict(),
            "model": self.model_.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        est = cls(**d["params"])
        est.feature_stats_ = stats_from_dict(d["feature_stats"])
        est.model_ = LinearModel.from_dict(d["model"])
        return est


class NystromClassifier:
    """Linear SVM on the Nystrom embedding K_mm^(-1/2) K_mn of one measure."""

    method = "nystrom"

    def __init__(self, measure, per_class=10, basis_strategy="indx", C=1.0, fix="clip",
                 feature_norm="besvm", bias=False, seed=0, epsilon=1e-6, key=None):
        self.measure = measure
        self.per_class = per_class
        self.basis_strategy = basis_strategy
        self.C = C
        self.fix = fix
        self.feature_norm = feature_norm
        self.bias = bias
        self.seed = seed
        self.epsilon = epsilon
        self.key = key
        self.timings = {}

    def _data(self, X):
        if isinstance(X, dict):
            return X[self.key] if self.key is not None else next(iter(X.values()))
        return X

    def fit(self, X, y):
        y = np.asarray(y)
        t0 = time.perf_counter()
        data = self._data(X)
        self.feature_stats_ = fit_feature_norm(data, self.feature_norm)
        Xn = apply_feature_norm(data, self.feature_stats_)
        idx = select_basis(self.basis_strategy, y, self.per_class, seed=self.seed)
        self.basis_ = BasisSet.from_indices(Xn, y, idx)
        K_mm = gram_values(self.measure, self.basis_.payload, self.basis_.payload)
        K_mn = gram_values(self.measure, self.basis_.payload, Xn)
        # projection = fixed(K_mm)^(-1/2), recovered by embedding the identity
        self.projection_ = nystrom_embed(K_mm, np.eye(len(idx)), fix=self.fix)
        Psi = (self.projection_ @ K_mn).T
        self.map_stats_ = fit_center_scale(Psi)
        self.model_ = train_one_vs_rest(self.map_stats_.apply(Psi), y, C=self.C, bias=self.bias,
                                        epsilon=self.epsilon, seed=self.seed)
        self.timings = {"total_s": time.perf_counter() - t0}
        return self

    def predict(self, X):
        Xn = apply_feature_norm(self._data(X), self.feature_stats_)
        Psi = (self.projection_ @ gram_values(self.measure, self.basis_.payload, Xn)).T
        return self.model_.predict(self.map_stats_.apply(Psi))

    @property
    def n_parameters(self):
        return int(self.model_.weights.size)

    @property
    def n_supporting(self):
        return len(self.basis_)

    def to_dict(self):
        return {
            "version": MODEL_VERSION,
            "method": self.method,
            "params": {"per_class": self.per_class, "basis_strategy": self.basis_strategy, "C": self.C,
                       "fix": self.fix, "feature_norm": self.feature_norm, "bias": self.bias,
                       "seed": self.seed, "epsilon": self.epsilon, "key": self.key},
            "measure": self.measure.to_dict(),
            "feature_stats": _stats_dict(self.feature_stats_),
            "basis": self.basis_.to_dict(),
            "projection": self.projection_.tolist(),
            "map_stats": self.map_stats_.to_dict(),
            "model": self.model_.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        est = cls(SimilarityMeasure.from_dict(d["measure"]), **d["params"])
        est.feature_stats_ = _stats_from(d["feature_stats"])
        est.basis_ = BasisSet.from_dict(d["basis"])
        est.projection_ = np.array(d["projection"])
        est.map_stats_ = stats_from_dict(d["map_stats"])
        est.model_ = LinearModel.from_dict(d["model"])
        return est


class KernelSVMClassifier:
    """One-vs-one dual SVM on a precomputed Gram matrix of one PSD measure."""

    method = "kernel"

    def __init__(self, measure, C=2.0, feature_norm="besvm", tol=1e-3, fix=None, key=None):
        self.measure = measure
        self.C = C
        self.feature_norm = feature_norm
        self.tol = tol
        self.fix = fix
        self.key = key
        self.timings = {}

    def _data(self, X):
        if isinstance(X, dict):
            return X[self.key] if self.key is not None else next(iter(X.values()))
        return X

    def fit(self, X, y):
        t0 = time.perf_counter()
        data = self._data(X)
        self.feature_stats_ = fit_feature_norm(data, self.feature_norm)
        Xn = apply_feature_norm(data, self.feature_stats_)
        K = gram_values(self.measure, Xn, Xn)
        if self.fix:
            K = spectrum_fix((K + K.T) / 2, self.fix)
        t1 = time.perf_counter()
        model = train_one_vs_one(K, y, C=self.C, tol=self.tol)
        # keep only the exemplars some machine depends on
        support = model.support
        remap = {int(s): i for i, s in enumerate(support)}
        for m in model.machines:
            m["support"] = [remap[int(s)] for s in m["support"]]
        self.model_ = model
        self.support_payload_ = np.asarray(Xn)[support]
        self.timings = {"gram_s": t1 - t0, "solve_s": time.perf_counter() - t1}
        return self

    def predict(self, X):
        Xn = apply_feature_norm(self._data(X), self.feature_stats_)
        K_test = gram_values(self.measure, self.support_payload_, Xn).T
        return self.model_.predict(K_test)

    @property
    def n_supporting(self):
        return len(self.support_payload_)

    @property
    def n_parameters(self):
        per = int(np.prod(np.shape(self.support_payload_)[1:]))
        return self.n_supporting * (per + 1)

    def to_dict(self):
        return {
            "version": MODEL_VERSION,
            "method": self.method,
            "params": {"C": self.C, "feature_norm": self.feature_norm, "tol": self.tol,
                       "fix": self.fix, "key": self.key},
            "measure": self.measure.to_dict(),
            "feature_stats": _stats_dict(self.feature_stats_),
            "support_payload": _payload_to_json(self.support_payload_),
            "model": self.model_.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        est = cls(SimilarityMeasure.from_dict(d["measure"]), **d["params"])
        est.feature_stats_ = _stats_from(d["feature_stats"])
        est.support_payload_ = _payload_from_json(d["support_payload"])
        est.model_ = KernelModel.from_dict(d["model"])
        return est


ESTIMATORS = {c.method: c for c in (BESVMClassifier, LinearSVMClassifier, NystromClassifier, KernelSVMClassifier)}


def estimator_from_dict(d):
    if d.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {d.get('version')!r}")
    return ESTIMATORS[d["method"]].from_dict(d)

"""Linear and kernel SVM training, multiclass reductions, model selection.

The linear solver minimizes 0.5 * |w|^2 + C * sum(loss(y_i * w.x_i)) with
the squared hinge (default) or the plain hinge by dual coordinate descent.
It stops once the duality gap certifies the primal objective to a relative
accuracy ``epsilon``.
"""
import copy
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .datasets import FoldSplit, even_fold_sizes, split_folds
from .errors import (
    AsymmetricInput,
    DimensionMismatch,
    EmptyFold,
    NonPSDInput,
    SingleClassInput,
)

log = logging.getLogger(__name__)

MODEL_VERSION = 1
SQUARED_HINGE, HINGE = "squared_hinge", "hinge"
PSD_TOL = 1e-8


def squared_hinge_loss(margins):
    return np.maximum(0.0, 1.0 - np.asarray(margins)) ** 2


def hinge_loss(margins):
    return np.maximum(0.0, 1.0 - np.asarray(margins))


def primal_objective(w, X, y, C, loss=SQUARED_HINGE):
    margins = y * (X @ w)
    per_sample = squared_hinge_loss(margins) if loss == SQUARED_HINGE else hinge_loss(margins)
    return 0.5 * float(w @ w) + C * float(per_sample.sum())


def _with_bias_column(X):
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _as_binary_labels(y):
    y = np.asarray(y, dtype=np.float64).ravel()
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("binary labels must be +1/-1")
    if not ((y > 0).any() and (y < 0).any()):
        raise SingleClassInput("both +1 and -1 labels are required")
    return y


@dataclass
class LinearSolution:
    w: np.ndarray
    bias: float
    objective: float
    dual_objective: float
    n_iter: int
    converged: bool

    @property
    def gap(self):
        return self.objective - self.dual_objective


def train_linear_svm(X, y, C=1.0, epsilon=1e-6, bias=False, loss=SQUARED_HINGE,
                     seed=0, max_iter=2000, backend=None):
    """Binary linear SVM by dual coordinate descent with random sweeps.

    With ``bias`` a constant feature of value 1 is appended; it is
    regularized like every other weight.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch("X must be a 2-D array")
    y = _as_binary_labels(y)
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"{X.shape[0]} rows but {y.shape[0]} labels")
    if not C > 0:
        raise ValueError("C must be positive")
    if loss not in (SQUARED_HINGE, HINGE):
        raise ValueError(f"unknown loss {loss!r}")
    kernels = _backend.get(backend)

    Xa = np.ascontiguousarray(_with_bias_column(X)) if bias else X
    n, D = Xa.shape
    if loss == SQUARED_HINGE:
        diag, upper = 0.5 / C, math.inf
    else:
        diag, upper = 0.0, float(C)
    qd = np.einsum("ij,ij->i", Xa, Xa) + diag
    alpha = np.zeros(n)
    w = np.zeros(D)
    rng = np.random.default_rng(seed)

    converged = False
    primal = dual = math.nan
    it = 0
    while it < max_iter:
        it += 1
        perm = rng.permutation(n).astype(np.int64)
        pg_max, pg_min = kernels.dcd_sweep(Xa, y, alpha, w, qd, diag, upper, perm)
        primal = primal_objective(w, Xa, y, C, loss)
        dual = float(alpha.sum() - 0.5 * (w @ w) - 0.5 * diag * (alpha @ alpha))
        if primal - dual <= epsilon * abs(primal) or pg_max - pg_min <= 1e-14:
            converged = True
            break
    if not converged:
        warnings.warn(f"linear SVM stopped after {max_iter} sweeps with relative gap "
                      f"{(primal - dual) / abs(primal):.2e}", RuntimeWarning, stacklevel=2)
    if bias:
        return LinearSolution(w[:-1].copy(), float(w[-1]), primal, dual, it, converged)
    return LinearSolution(w, 0.0, primal, dual, it, converged)


def train_linear_squared_hinge(X, y, C=1.0, epsilon=1e-6, bias=False, **kwargs):
    return train_linear_svm(X, y, C=C, epsilon=epsilon, bias=bias, loss=SQUARED_HINGE, **kwargs)


@dataclass
class LinearModel:
    """One weight row per class; prediction is the argmax of the scores."""

    weights: np.ndarray
    biases: np.ndarray
    classes: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=np.float64))
        self.biases = np.asarray(self.biases, dtype=np.float64)
        self.classes = np.asarray(self.classes, dtype=np.int64)

    @property
    def dim(self):
        return self.weights.shape[1]

    def decision_function(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.dim:
            raise DimensionMismatch(f"model expects dimension {self.dim}, got {X.shape[-1]}")
        return X @ self.weights.T + self.biases

    def predict(self, X):
        scores = np.atleast_2d(self.decision_function(X))
        # argmax keeps the first maximum, i.e. the lowest class id
        return self.classes[np.argmax(scores, axis=1)]

    def to_dict(self):
        return {
            "version": MODEL_VERSION,
            "type": "linear",
            "classes": self.classes.tolist(),
            "weights": self.weights.tolist(),
            "biases": self.biases.tolist(),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("type") != "linear":
            raise ValueError("not a linear model document")
        return cls(np.array(d["weights"]), np.array(d["biases"]), np.array(d["classes"]), d.get("meta", {}))


def predict(model, x):
    """(class id, per-class decision values) for one sample."""
    scores = model.decision_function(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]
    return int(model.classes[int(np.argmax(scores))]), scores


def _parallel_map(fn, items, n_threads=None):
    items = list(items)
    threads = min(n_threads or _backend.n_threads(), len(items))
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, items))


def train_one_vs_rest(X, labels, C=1.0, bias=False, epsilon=1e-6, loss=SQUARED_HINGE,
                      seed=0, max_iter=2000, n_threads=None, backend=None):
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if len(classes) < 2:
        raise SingleClassInput("one-vs-rest needs at least two classes")

    def fit(c):
        y = np.where(labels == c, 1.0, -1.0)
        return train_linear_svm(X, y, C=C, epsilon=epsilon, bias=bias, loss=loss,
                                seed=seed, max_iter=max_iter, backend=backend)

    sols = _parallel_map(fit, classes, n_threads)
    return LinearModel(np.stack([s.w for s in sols]), np.array([s.bias for s in sols]), classes,
                       {"C": C, "loss": loss, "bias": bias})


# kernel SVM -------------------------------------------------------------


def check_psd(K, tol=PSD_TOL):
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise AsymmetricInput("kernel matrix must be square")
    if np.max(np.abs(K - K.T), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(K), initial=0.0)):
        raise AsymmetricInput("kernel matrix is not symmetric")
    lam = np.linalg.eigvalsh((K + K.T) / 2)
    top = max(np.max(np.abs(lam), initial=0.0), 1e-300)
    if lam.size and lam[0] < -tol * top:
        raise NonPSDInput(f"kernel matrix has eigenvalue {lam[0]:.3g}; apply spectrum_fix first")


@dataclass
class KernelSolution:
    alpha: np.ndarray
    bias: float
    y: np.ndarray
    n_iter: int

    @property
    def coef(self):
        return self.alpha * self.y

    def decision(self, K_test_train):
        return np.asarray(K_test_train) @ self.coef + self.bias


def _kernel_bias(alpha, G, y, C):
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return -float(yG[free].mean())
    at_upper = alpha >= C
    pos = y > 0
    ub_mask = (at_upper & ~pos) | (~at_upper & pos)
    lb_mask = (at_upper & pos) | (~at_upper & ~pos)
    ub = yG[ub_mask].min() if ub_mask.any() else math.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -math.inf
    if not (math.isfinite(ub) and math.isfinite(lb)):
        return -float(ub if math.isfinite(ub) else lb)
    return -0.5 * float(ub + lb)


def train_kernel_svm_dual(K, y, C=1.0, tol=1e-3, max_iter=10_000_000, check=True, backend=None):
    """Box-constrained dual SVM on a precomputed PSD Gram matrix."""
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = _as_binary_labels(y)
    if K.shape != (len(y), len(y)):
        raise DimensionMismatch(f"kernel of shape {K.shape} for {len(y)} labels")
    if check:
        check_psd(K)
    alpha, G, it = _backend.get(backend).smo(K, y, float(C), float(tol), int(max_iter))
    return KernelSolution(alpha, _kernel_bias(alpha, G, y, C), y, int(it))


def kernel_dual_objective(sol, K):
    Q = (sol.y[:, None] * sol.y[None, :]) * K
    return float(sol.alpha.sum() - 0.5 * sol.alpha @ Q @ sol.alpha)


def kernel_primal_objective(sol, K, C):
    Q = (sol.y[:, None] * sol.y[None, :]) * K
    f = sol.decision(K)
    return float(0.5 * sol.alpha @ Q @ sol.alpha + C * hinge_loss(sol.y * f).sum())


@dataclass
class KernelModel:
    """One-vs-one machines over a training set referenced by index."""

    classes: np.ndarray
    machines: list
    meta: dict = field(default_factory=dict)

    @property
    def support(self):
        idx = set()
        for m in self.machines:
            idx.update(m["support"])
        return np.array(sorted(idx), dtype=np.int64)

    def decision_votes(self, K_test_train):
        K_test_train = np.atleast_2d(np.asarray(K_test_train, dtype=np.float64))
        votes = np.zeros((K_test_train.shape[0], len(self.classes)), dtype=np.int64)
        pos = {c: i for i, c in enumerate(self.classes.tolist())}
        for m in self.machines:
            sup = np.asarray(m["support"], dtype=np.int64)
            f = K_test_train[:, sup] @ np.asarray(m["coef"]) + m["bias"]
            a, b = pos[m["pair"][0]], pos[m["pair"][1]]
            votes[:, a] += f >= 0
            votes[:, b] += f < 0
        return votes

    def predict(self, K_test_train):
        """K_test_train[i, j] = k(test_i, train_j); majority vote, ties to the lowest id."""
        return self.classes[np.argmax(self.decision_votes(K_test_train), axis=1)]

    def to_dict(self):
        return {
            "version": MODEL_VERSION,
            "type": "kernel",
            "classes": self.classes.tolist(),
            "machines": [{"pair": list(m["pair"]), "support": list(map(int, m["support"])),
                          "coef": list(map(float, m["coef"])), "bias": float(m["bias"])}
                         for m in self.machines],
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("type") != "kernel":
            raise ValueError("not a kernel model document")
        return cls(np.array(d["classes"]), [dict(m) for m in d["machines"]], d.get("meta", {}))


def train_one_vs_one(K, labels, C=1.0, tol=1e-3, check=True, n_threads=None, backend=None):
    K = np.asarray(K, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if len(classes) < 2:
        raise SingleClassInput("one-vs-one needs at least two classes")
    if check:
        check_psd(K)
    pairs = [(a, b) for i, a in enumerate(classes) for b in classes[i + 1:]]

    def fit(pair):
        a, b = pair
        idx = np.flatnonzero((labels == a) | (labels == b))
        y = np.where(labels[idx] == a, 1.0, -1.0)
        sol = train_kernel_svm_dual(K[np.ix_(idx, idx)], y, C=C, tol=tol, check=False, backend=backend)
        nz = sol.alpha > 0
        return {"pair": (int(a), int(b)), "support": idx[nz].tolist(),
                "coef": sol.coef[nz].tolist(), "bias": sol.bias}

    machines = _parallel_map(fit, pairs, n_threads)
    return KernelModel(classes, machines, {"C": C})


# model selection ---------------------------------------------------------


def _take(payload, idx):
    if isinstance(payload, dict):
        return {k: np.asarray(v)[idx] for k, v in payload.items()}
    return np.asarray(payload)[idx]


def _payload_len(payload):
    if isinstance(payload, dict):
        return len(next(iter(payload.values())))
    return len(payload)


def make_folds(n, folds):
    if isinstance(folds, FoldSplit):
        split = folds
        n_folds = split.n_folds
    else:
        n_folds = int(folds)
        if n_folds < 2:
            raise ValueError("cross validation needs at least 2 folds")
        if n_folds > n:
            raise EmptyFold(f"{n_folds} folds for {n} samples leaves a fold empty")
        split = split_folds(n, even_fold_sizes(n, n_folds))
    for f in range(n_folds):
        if split.indices(f).size == 0:
            raise EmptyFold(f"fold {f} is empty")
    return split, n_folds


@dataclass
class CVResult:
    mean: float
    fold_accuracies: list


def cross_validate(trainer, X, labels, folds=10, return_result=False):
    """Mean held-out accuracy over contiguous folds.

    ``trainer`` is either an estimator with ``fit(X, y)``/``predict(X)``
    (deep-copied per fold) or a callable ``(X_train, y_train, X_test) ->
    predictions``. Only training rows reach the fitting code.
    """
    labels = np.asarray(labels)
    n = _payload_len(X)
    if n != len(labels):
        raise DimensionMismatch(f"{n} samples but {len(labels)} labels")
    split, n_folds = make_folds(n, folds)
    accs = []
    for f in range(n_folds):
        tr, te = split.train_test(f)
        X_tr, X_te = _take(X, tr), _take(X, te)
        if callable(trainer) and not hasattr(trainer, "fit"):
            pred = trainer(X_tr, labels[tr], X_te)
        else:
            est = copy.deepcopy(trainer)
            est.fit(X_tr, labels[tr])
            pred = est.predict(X_te)
        accs.append(float(np.mean(np.asarray(pred) == labels[te])))
    result = CVResult(float(np.mean(accs)), accs)
    return result if return_result else result.mean


def cross_validate_kernel(K, labels, C=1.0, folds=5, tol=1e-3):
    """Fold accuracy of one-vs-one kernel SVM on a precomputed Gram matrix."""
    K = np.asarray(K, dtype=np.float64)
    labels = np.asarray(labels)
    split, n_folds = make_folds(len(labels), folds)
    accs = []
    for f in range(n_folds):
        tr, te = split.train_test(f)
        if len(np.unique(labels[tr])) < 2:
            accs.append(float(np.mean(labels[te] == labels[tr][0])))
            continue
        model = train_one_vs_one(K[np.ix_(tr, tr)], labels[tr], C=C, tol=tol, check=False)
        accs.append(float(np.mean(model.predict(K[np.ix_(te, tr)]) == labels[te])))
    return float(np.mean(accs))


MKL_GRID = tuple(round(0.1 * i, 1) for i in range(11))


@dataclass
class LineSearchResult:
    alpha: float
    accuracy: float
    scores: dict


def mkl_line_search(K1, K2, labels, C=1.0, grid=MKL_GRID, folds=5, tol=1e-3):
    """Best alpha for alpha * K1 + (1 - alpha) * K2 by CV accuracy; ties -> smallest alpha."""
    K1 = np.asarray(K1, dtype=np.float64)
    K2 = np.asarray(K2, dtype=np.float64)
    if K1.shape != K2.shape:
        raise DimensionMismatch("K1 and K2 differ in shape")
    grid = sorted(float(a) for a in grid)
    if not grid or grid[0] < 0 or grid[-1] > 1:
        raise ValueError("grid must be a nonempty subset of [0, 1]")
    check_psd(K1)
    check_psd(K2)
    scores = {}
    for a in grid:
        scores[a] = cross_validate_kernel(a * K1 + (1 - a) * K2, labels, C=C, folds=folds, tol=tol)
    best = max(scores.values())
    alpha = min(a for a, s in scores.items() if s == best)
    return LineSearchResult(alpha, best, scores)


@dataclass
class GreedyResult:
    order: list
    accuracies: list
    history: list = field(default_factory=list)


def greedy_measure_augmentation(candidates, labels, make_estimator, folds=5, min_gain=0.001):
    """Grow a measure list greedily by cross-validated accuracy.

    ``candidates`` maps a label to ``(measure, payload)``. ``make_estimator``
    receives the list of chosen ``(label, measure)`` pairs and returns an
    estimator that accepts a dict payload keyed by label.
    """
    labels = np.asarray(labels)
    if not candidates:
        raise ValueError("need at least one candidate measure")
    remaining = list(candidates)
    chosen, accs, history = [], [], []
    current = -math.inf
    while remaining:
        round_scores = {}
        for name in remaining:
            trial = chosen + [name]
            payload = {k: candidates[k][1] for k in trial}
            est = make_estimator([(k, candidates[k][0]) for k in trial])
            round_scores[name] = cross_validate(est, payload, labels, folds)
        history.append(round_scores)
        best_name = max(remaining, key=lambda k: (round_scores[k], -remaining.index(k)))
        gain = round_scores[best_name] - current
        if chosen and gain <= min_gain:
            break
        chosen.append(best_name)
        accs.append(round_scores[best_name])
        current = round_scores[best_name]
        remaining.remove(best_name)
        log.info("greedy round %d: + %s -> %.4f", len(chosen), best_name, current)
    return GreedyResult(chosen, accs, history)

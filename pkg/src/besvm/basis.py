"""Class-balanced basis selection: random, index stride and kernel k-medoids."""
from dataclasses import dataclass, field

import numpy as np

from .errors import ClassUndersized, KOutOfRange

STRATEGIES = ("rand", "indx", "kmed")


def _class_members(labels, per_class):
    labels = np.asarray(labels)
    groups = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if len(members) < per_class:
            raise ClassUndersized(f"class {c} has {len(members)} samples, need {per_class}")
        groups.append(members)
    return groups


def select_random(labels, per_class, seed=0):
    """per_class uniform draws without replacement from every class."""
    rng = np.random.default_rng(seed)
    picked = [np.sort(rng.choice(members, per_class, replace=False))
              for members in _class_members(labels, per_class)]
    return np.concatenate(picked).astype(np.int64) if picked else np.zeros(0, np.int64)


def select_index_stride(labels, per_class):
    """Positions floor(i * n_c / per_class) of each class's index-ordered list."""
    picked = []
    for members in _class_members(labels, per_class):
        n_c = len(members)
        picked.append(members[(np.arange(per_class) * n_c) // per_class])
    return np.concatenate(picked).astype(np.int64) if picked else np.zeros(0, np.int64)


@dataclass
class KMedoidsResult:
    medoids: np.ndarray
    assignment: np.ndarray
    objective_history: list = field(default_factory=list)
    n_iter: int = 0


def _assign(S, medoids):
    sims = S[:, medoids]
    # argmax returns the first maximum; medoids are kept sorted so ties go to the lowest index
    which = np.argmax(sims, axis=1)
    # a medoid always belongs to its own cluster, even when the measure is not
    # diagonally dominant; this keeps clusters nonempty and the objective monotone
    which[medoids] = np.arange(len(medoids))
    return which, float(sims[np.arange(len(S)), which].sum())


def _build_init(S, k):
    """Greedy start: each new medoid maximizes the resulting objective."""
    n = len(S)
    best = np.full(n, -np.inf)
    chosen = []
    for _ in range(k):
        gains = np.where(np.isfinite(best)[:, None], np.maximum(best[:, None], S), S).sum(axis=0)
        gains[chosen] = -np.inf
        j = int(np.argmax(gains))
        chosen.append(j)
        best = np.maximum(best, S[:, j])
    return np.sort(np.array(chosen, dtype=np.int64))


def kernel_kmedoids(S, k, max_iter=100, seed=None, init="build"):
    """Alternating k-medoids that maximizes total similarity to medoids.

    S[i, j] is the similarity of point i to candidate medoid j. Assignment
    sends each point to its most similar medoid; the update picks, per
    cluster, the member with the largest summed similarity from the
    cluster. Ties go to the lowest index.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("similarity matrix must be square")
    n = len(S)
    if not 1 <= k <= n:
        raise KOutOfRange(f"k={k} outside 1..{n}")
    if init == "random":
        rng = np.random.default_rng(seed)
        medoids = np.sort(rng.choice(n, k, replace=False))
    else:
        medoids = _build_init(S, k)

    which, obj = _assign(S, medoids)
    history = [obj]
    it = 0
    while it < max_iter:
        it += 1
        new = medoids.copy()
        for c in range(k):
            members = np.flatnonzero(which == c)
            totals = S[np.ix_(members, members)].sum(axis=0)
            new[c] = members[int(np.argmax(totals))]
        new = np.sort(new)
        if np.array_equal(new, medoids):
            break
        medoids = new
        which, obj = _assign(S, medoids)
        history.append(obj)
    return KMedoidsResult(medoids, which, history, it)


def select_kernel_kmedoids(S, k, max_iter=100, seed=None):
    return kernel_kmedoids(S, k, max_iter=max_iter, seed=seed).medoids


def select_kmedoids_per_class(S, labels, per_class, max_iter=100):
    """Run k-medoids inside each class on the class's own similarity block."""
    picked = []
    for members in _class_members(labels, per_class):
        sub = np.asarray(S)[np.ix_(members, members)]
        picked.append(members[kernel_kmedoids(sub, per_class, max_iter=max_iter).medoids])
    return np.concatenate(picked).astype(np.int64) if picked else np.zeros(0, np.int64)


def select_basis(strategy, labels, per_class, seed=0, similarity=None):
    """Dispatch on the strategy names used in experiment configs."""
    key = strategy.lower()
    if key in ("rand", "random"):
        return select_random(labels, per_class, seed)
    if key in ("indx", "index", "stride"):
        return select_index_stride(labels, per_class)
    if key in ("kmed", "kkmed", "kmedoids"):
        if similarity is None:
            raise ValueError("k-medoids selection needs a similarity matrix")
        return select_kmedoids_per_class(similarity, labels, per_class)
    raise ValueError(f"unknown basis strategy {strategy!r}")

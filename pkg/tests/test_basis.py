import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from besvm import basis
from besvm.errors import ClassUndersized, KOutOfRange

S3 = np.array([[1, .9, .1], [.9, 1, .1], [.1, .1, 1]])


def test_ten_by_hundred_basis():
    labels = np.repeat(np.arange(10), 150)
    for idx in (basis.select_random(labels, 100, seed=1), basis.select_index_stride(labels, 100)):
        assert len(idx) == 1000
        assert np.bincount(labels[idx]).tolist() == [100] * 10
        assert len(set(idx.tolist())) == 1000


def test_index_stride_example():
    labels = np.zeros(7, int)
    assert basis.select_index_stride(labels, 3).tolist() == [0, 2, 4]


def test_index_stride_uses_class_positions():
    labels = np.array([1, 0, 1, 0, 1, 1])
    # class 0 -> [1, 3], class 1 -> [0, 2, 4, 5]
    assert basis.select_index_stride(labels, 2).tolist() == [1, 3, 0, 4]


def test_class_undersized():
    with pytest.raises(ClassUndersized):
        basis.select_random([0, 0, 1], 2)
    with pytest.raises(ClassUndersized):
        basis.select_index_stride([0, 0, 1], 2)


def test_random_is_seeded():
    labels = np.arange(100) % 4
    assert np.array_equal(basis.select_random(labels, 5, seed=3), basis.select_random(labels, 5, seed=3))
    assert not np.array_equal(basis.select_random(labels, 5, seed=3), basis.select_random(labels, 5, seed=4))


def test_kmedoids_examples():
    assert basis.select_kernel_kmedoids(S3, 1).tolist() == [0]
    assert basis.select_kernel_kmedoids(S3, 2).tolist() == [0, 2]


def test_kmedoids_k_range():
    with pytest.raises(KOutOfRange):
        basis.kernel_kmedoids(S3, 0)
    with pytest.raises(KOutOfRange):
        basis.kernel_kmedoids(S3, 4)


def test_kmedoids_blocks(rng):
    pts = np.concatenate([rng.normal(0, 0.1, size=(10, 2)), rng.normal(5, 0.1, size=(12, 2))])
    S = -np.sum((pts[:, None] - pts[None]) ** 2, axis=2)
    res = basis.kernel_kmedoids(S, 2)
    assert sorted((res.medoids >= 10).tolist()) == [False, True]
    assert res.assignment[:10].tolist() == [res.assignment[0]] * 10


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(1, 3)),
              elements=st.floats(-5, 5, allow_nan=False)),
       st.integers(1, 12), st.sampled_from(["build", "random"]), st.integers(0, 100))
def test_kmedoids_monotone(X, k, init, seed):
    n = len(X)
    k = min(k, n)
    S = X @ X.T
    res = basis.kernel_kmedoids(S, k, max_iter=20, init=init, seed=seed)
    assert len(res.medoids) == k and len(set(res.medoids.tolist())) == k
    assert res.n_iter <= 20
    h = res.objective_history
    assert all(b >= a - 1e-9 for a, b in zip(h, h[1:]))


def test_select_basis_dispatch(rng):
    labels = np.arange(20) % 2
    X = rng.normal(size=(20, 2))
    S = X @ X.T
    for name in ("rand", "indx", "kmed"):
        idx = basis.select_basis(name, labels, 3, seed=0, similarity=S)
        assert np.bincount(labels[idx]).tolist() == [3, 3]
    with pytest.raises(ValueError):
        basis.select_basis("best", labels, 3)

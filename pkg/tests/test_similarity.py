import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from besvm import similarity as sim
from besvm._backend import BACKENDS
from besvm.errors import CellDimMismatch, DimensionMismatch
from besvm.similarity import SimilarityMeasure

from oracles import grid_similarity

grids = st.tuples(st.integers(1, 4), st.integers(1, 4), st.integers(1, 3)).flatmap(
    lambda s: st.tuples(
        arrays(np.float64, s, elements=st.floats(-3, 3, allow_nan=False, width=32)),
        arrays(np.float64, s, elements=st.floats(-3, 3, allow_nan=False, width=32)),
    ))


def test_rbf_examples():
    assert sim.eval_rbf([0.0], [1.0], 1.0) == pytest.approx(np.exp(-1), abs=1e-12)
    assert sim.eval_rbf([0.0], [2.0], 0.25) == pytest.approx(0.36787944117144233, abs=1e-12)


def test_linear_dim_mismatch():
    with pytest.raises(DimensionMismatch):
        sim.eval_linear([1, 2], [1, 2, 3])


def test_rigid_example(backend):
    x = np.array([1.0, 0.0]).reshape(1, 2, 1)
    y = np.array([0.0, 1.0]).reshape(1, 2, 1)
    assert sim.eval_rigid(x, y, 0, backend=backend) == 0.0
    assert sim.eval_rigid(x, y, 1, backend=backend) == 1.0


def test_deformable_example(backend):
    x = np.array([1.0, 0.0]).reshape(1, 2, 1)
    y = np.array([0.0, 1.0]).reshape(1, 2, 1)
    assert sim.eval_deformable(x, y, 0, 1, 0.0, backend=backend) == 1.0


def test_large_penalty_reduces_to_rigid(rng, backend):
    x = rng.random((3, 3, 2))
    y = rng.random((3, 3, 2))
    lam = 10 * float(np.abs(x).max() * np.abs(y).max() * 2)
    assert sim.eval_deformable(x, y, 1, 2, lam, backend=backend) == pytest.approx(
        sim.eval_rigid(x, y, 1, backend=backend), abs=1e-12)


def test_cell_dim_mismatch(backend):
    with pytest.raises(CellDimMismatch):
        sim.eval_rigid(np.zeros((2, 2, 3)), np.zeros((2, 2, 4)), 1, backend=backend)


@settings(max_examples=60, deadline=None)
@given(grids, st.integers(0, 2), st.integers(0, 2), st.sampled_from([0.0, 0.5]))
def test_grid_measure_matches_oracle(pair, h_r, h_l, lam):
    x, y = pair
    want = grid_similarity(x, y, h_r, h_l, lam)
    for backend in sorted(BACKENDS):
        got = sim.eval_deformable(x, y, h_r, h_l, lam, backend=backend)
        assert got == pytest.approx(want, rel=1e-9, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(grids, st.integers(0, 2))
def test_rigid_symmetric(pair, h_r):
    x, y = pair
    assert abs(sim.eval_rigid(x, y, h_r) - sim.eval_rigid(y, x, h_r)) <= 1e-12 * max(1, abs(sim.eval_rigid(x, y, h_r)))


@settings(max_examples=50, deadline=None)
@given(grids)
def test_monotone_in_shifts(pair):
    x, y = pair
    dot = float(np.sum(x * y))
    prev_r = -np.inf
    for h_r in range(3):
        rigid = sim.eval_rigid(x, y, h_r)
        assert rigid >= prev_r - 1e-12
        prev_r = rigid
        prev_l = rigid
        for h_l in range(1, 3):
            d = sim.eval_deformable(x, y, h_r, h_l)
            assert d >= prev_l - 1e-12
            prev_l = d
        assert rigid >= dot - 1e-12


def test_deformable_may_be_asymmetric():
    # documents orientation: the second argument is the deformed one
    x = np.zeros((1, 3, 1))
    x[0, 1, 0] = 1.0
    y = np.array([1.0, 0.0, 1.0]).reshape(1, 3, 1)
    assert sim.eval_deformable(x, y, 0, 1) == 1.0
    assert sim.eval_deformable(y, x, 0, 1) == 2.0


def test_gram_matches_pairwise(rng, backend):
    G = rng.normal(size=(3, 4, 4, 5))
    m = SimilarityMeasure.rigid(1)
    S = sim.gram_values(m, G, G, backend=backend)
    expect = np.array([[sim.eval_rigid(a, b, 1, backend=backend) for b in G] for a in G])
    assert np.array_equal(S, expect)


def test_gram_orientation_rows_basis(rng):
    A = rng.normal(size=(2, 3, 3, 2))
    B = rng.normal(size=(4, 3, 3, 2))
    m = SimilarityMeasure.deformable(1, 1)
    S = sim.gram_values(m, A, B)
    assert S.shape == (2, 4)
    assert S[1, 3] == pytest.approx(sim.eval_deformable(A[1], B[3], 1, 1), abs=1e-12)


def test_gram_threads_equal_serial(rng):
    A = rng.normal(size=(5, 3, 3, 4))
    B = rng.normal(size=(13, 3, 3, 4))
    m = SimilarityMeasure.deformable(1, 1)
    assert np.array_equal(sim.gram_values(m, A, B, n_threads=1), sim.gram_values(m, A, B, n_threads=3))


def test_gram_ragged_grids(rng):
    A = [rng.normal(size=(2, 3, 2)), rng.normal(size=(3, 3, 2))]
    m = SimilarityMeasure.rigid(1)
    S = sim.gram_values(m, A, A)
    assert S[0, 1] == pytest.approx(grid_similarity(A[0], A[1], 1, 0), abs=1e-12)


def test_gram_cell_dim_mismatch(rng):
    with pytest.raises(CellDimMismatch):
        sim.gram_values(SimilarityMeasure.rigid(0), rng.normal(size=(2, 2, 2, 3)), rng.normal(size=(2, 2, 2, 4)))


def test_symmetric_grams(rng):
    X = rng.normal(size=(12, 3))
    for m in (SimilarityMeasure.linear(), SimilarityMeasure.rbf(0.7)):
        S = sim.gram(m, X, X).values
        assert np.max(np.abs(S - S.T)) <= 1e-9
    G = rng.normal(size=(6, 3, 3, 2))
    S = sim.gram_values(SimilarityMeasure.rigid(1), G, G)
    assert np.max(np.abs(S - S.T)) <= 1e-9


def test_rbf_gram_matches_scalar(rng):
    X = rng.normal(size=(7, 3))
    Y = rng.normal(size=(5, 3))
    S = sim.gram_values(SimilarityMeasure.rbf(0.3), X, Y)
    assert np.allclose(S, [[sim.eval_rbf(a, b, 0.3) for b in Y] for a in X], atol=1e-14)


@settings(max_examples=30)
@given(arrays(np.float64, st.tuples(st.integers(1, 15), st.integers(1, 5)),
              elements=st.floats(-10, 10, allow_nan=False)))
def test_linear_gram_psd(X):
    S = sim.gram_values(SimilarityMeasure.linear(), X, X)
    scale = max(1.0, float(np.abs(S).max()))
    assert np.linalg.eigvalsh(S).min() >= -1e-8 * scale


@pytest.mark.parametrize("m", [SimilarityMeasure.linear(), SimilarityMeasure.rbf(2.5),
                               SimilarityMeasure.rigid(2), SimilarityMeasure.deformable(1, 2, 0.25)])
def test_measure_round_trip(m):
    assert SimilarityMeasure.from_dict(m.to_dict()) == m


def test_measure_validation():
    with pytest.raises(ValueError):
        SimilarityMeasure.rbf(0.0)
    with pytest.raises(ValueError):
        SimilarityMeasure.rigid(-1)


def test_measure_labels():
    assert SimilarityMeasure.linear().label == "L"
    assert SimilarityMeasure.rigid(1).label == "(1,0)"
    assert SimilarityMeasure.deformable(2, 1).label == "(2,1)"

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from besvm import features
from besvm.errors import DegenerateInput, DimensionMismatch, DimensionNotDivisible


@pytest.mark.parametrize("cell, grid, flat", [(8, 4, 496), (4, 8, 1984)])
def test_hog_dimensions(cell, grid, flat, rng):
    img = rng.integers(0, 256, size=(32, 32, 3)).astype(np.uint8)
    g = features.compute_hog_grid(img, cell)
    assert g.shape == (grid, grid) and g.cell_dim == 31
    assert g.flat().size == flat


def test_hog_not_divisible():
    with pytest.raises(DimensionNotDivisible):
        features.compute_hog_grid(np.zeros((30, 32, 3)), 8)


def test_out_of_grid_cells_are_zero(rng):
    g = features.compute_hog_grid(rng.random((16, 16)), 8)
    assert np.array_equal(g.cell(-1, 0), np.zeros(31))
    assert np.array_equal(g.cell(0, 2), np.zeros(31))


def test_flat_image_gives_zero_cells():
    g = features.compute_hog_grid(np.full((16, 16, 3), 77.0), 4)
    assert np.all(g.cells == 0)


def test_hog_bounds(rng):
    img = rng.integers(0, 256, size=(32, 32, 3)).astype(np.float64)
    c = features.compute_hog_grid(img, 4).cells
    assert c.min() >= 0
    # each orientation entry sums four truncated block responses with weight 0.5
    assert c[..., :27].max() <= 0.5 * 4 * 0.2 + 1e-12
    assert c[..., 27:].max() <= 0.2357 * 18 * 0.2 + 1e-12


def test_hog_translation_by_one_cell(rng):
    cell = 4
    pattern = rng.random((8, 8)) * 255
    img = np.full((40, 40), 50.0)
    img[12:20, 12:20] = pattern
    shifted = np.full((40, 40), 50.0)
    shifted[12:20, 16:24] = pattern
    a = features.compute_hog_grid(img, cell).cells
    b = features.compute_hog_grid(shifted, cell).cells
    assert np.allclose(a[1:-2, 1:-2], b[1:-2, 2:-1], atol=1e-12)


def test_hog_gradient_orientation():
    # vertical edge: gradient along +x, lands in orientation bin 0
    img = np.zeros((16, 16))
    img[:, 8:] = 100.0
    c = features.compute_hog_grid(img, 8).cells
    assert c[0, 0, 0] > 0 and c[0, 0, 9] == 0
    # the contrast-insensitive copy agrees
    assert c[0, 0, 18] > 0


def test_batch_preserves_order(rng):
    imgs = rng.integers(0, 256, size=(3, 16, 16, 3)).astype(np.uint8)
    batch = features.compute_hog_grids(imgs, 8)
    for i in range(3):
        assert np.array_equal(batch[i], features.compute_hog_grid(imgs[i], 8).cells)


def test_center_scale_example():
    s = features.fit_center_scale([[0.0], [2.0]])
    assert s.mean.tolist() == [1.0] and s.scale == 1.0


def test_center_scale_degenerate():
    with pytest.raises(DegenerateInput):
        features.fit_center_scale([[5.0], [5.0]])


def test_apply_wrong_dim():
    s = features.fit_center_scale([[0.0, 1.0], [2.0, 3.0]])
    with pytest.raises(DimensionMismatch):
        s.apply(np.zeros(3))


@settings(max_examples=50)
@given(arrays(np.float64, st.tuples(st.integers(2, 20), st.integers(1, 6)),
              elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_center_scale_properties(X):
    spread = np.linalg.norm(X - X.mean(axis=0), axis=1).mean()
    if spread < 1e-6:
        return
    Z = features.fit_center_scale(X).apply(X)
    assert np.allclose(Z.mean(axis=0), 0, atol=1e-10)
    assert abs(np.linalg.norm(Z, axis=1).mean() - 1) < 1e-10


@pytest.mark.parametrize("mode", ["BE-SVM", "Z-Score", "Unnorm"])
def test_stats_round_trip(mode, rng):
    X = rng.normal(size=(10, 4))
    s = features.fit_normalization(mode, X)
    back = features.stats_from_dict(s.to_dict())
    assert np.array_equal(back.apply(X), s.apply(X))


def test_zscore_unit_variance(rng):
    X = rng.normal(3, 5, size=(200, 3))
    Z = features.fit_zscore(X).apply(X)
    assert np.allclose(Z.std(axis=0), 1) and np.allclose(Z.mean(axis=0), 0)


def test_unknown_mode():
    with pytest.raises(ValueError):
        features.normalize_mode_name("l2")

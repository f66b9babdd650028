import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from besvm import datasets
from besvm.errors import DataError, FileSizeMismatch, LabelOutOfRange, SizeSumMismatch


def _two_record_bytes():
    rec0 = bytes([3]) + bytes(3072)
    rec1 = bytes([7]) + bytes([255]) * 3072
    return rec0 + rec1


def test_hand_built_cifar_file(tmp_path):
    path = tmp_path / "batch.bin"
    path.write_bytes(_two_record_bytes())
    s = datasets.load_cifar10_batch(str(path))
    assert s.labels.tolist() == [3, 7]
    assert s.images.shape == (2, 32, 32, 3)
    assert s.images[0].max() == 0 and s.images[1].min() == 255


def test_cifar_channel_planar_order(tmp_path):
    rec = bytearray(3073)
    rec[0] = 1
    rec[1 + 0 * 1024 + 5] = 10  # R at (0, 5)
    rec[1 + 1 * 1024 + 32] = 20  # G at (1, 0)
    rec[1 + 2 * 1024 + 1023] = 30  # B at (31, 31)
    path = tmp_path / "one.bin"
    path.write_bytes(bytes(rec))
    img = datasets.load_cifar10_batch(str(path)).images[0]
    assert img[0, 5, 0] == 10 and img[1, 0, 1] == 20 and img[31, 31, 2] == 30
    assert int(img.sum()) == 60


def test_truncated_record(tmp_path):
    path = tmp_path / "short.bin"
    path.write_bytes(bytes(3072))
    with pytest.raises(FileSizeMismatch):
        datasets.load_cifar10_batch(str(path))


def test_expected_count_mismatch(tmp_path):
    path = tmp_path / "b.bin"
    path.write_bytes(_two_record_bytes())
    with pytest.raises(FileSizeMismatch):
        datasets.load_cifar10_batch(str(path), expected_count=3)


def test_label_out_of_range(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(bytes([10]) + bytes(3072))
    with pytest.raises(LabelOutOfRange):
        datasets.load_cifar10_batch(str(path))


def test_missing_file_names_path(tmp_path):
    missing = str(tmp_path / "nope.bin")
    with pytest.raises(DataError, match="nope.bin"):
        datasets.load_cifar10_batch(missing)


def test_cifar_round_trip_bit_exact(tmp_path, rng):
    imgs = rng.integers(0, 256, size=(5, 32, 32, 3), dtype=np.uint8)
    s = datasets.LabeledImageSet(imgs, [0, 9, 4, 4, 1])
    path = str(tmp_path / "rt.bin")
    datasets.write_cifar10_batch(path, s)
    back = datasets.load_cifar10_batch(path)
    assert np.array_equal(back.images, s.images)
    assert np.array_equal(back.labels, s.labels)


def test_load_cifar_concatenates_in_order(tmp_path):
    a = tmp_path / "a.bin"
    b = tmp_path / "b.bin"
    a.write_bytes(_two_record_bytes())
    b.write_bytes(bytes([5]) + bytes(3072))
    s = datasets.load_cifar10([str(a), str(b)])
    assert s.labels.tolist() == [3, 7, 5]


def test_load_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1,0.5,2.0\n0,-1.0,3.25\n\n")
    s = datasets.load_csv(str(p))
    assert s.labels.tolist() == [1, 0]
    assert np.allclose(s.points, [[0.5, 2.0], [-1.0, 3.25]])


def test_csv_ragged_rows(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1,0.5,2.0\n0,1.0\n")
    with pytest.raises(DataError):
        datasets.load_csv(str(p))


def test_point_set_invariants():
    with pytest.raises(DataError):
        datasets.LabeledPointSet(np.zeros((3, 2)), [0, 1])


def test_split_folds_six_equal():
    split = datasets.split_folds(60, [10] * 6)
    assert split.n_folds == 6
    assert all(split.indices(f).tolist() == list(range(10 * f, 10 * f + 10)) for f in range(6))


def test_split_folds_size_mismatch():
    with pytest.raises(SizeSumMismatch):
        datasets.split_folds(5, [2, 2])


@given(st.lists(st.integers(0, 20), min_size=1, max_size=8))
def test_split_folds_partition(sizes):
    n = sum(sizes)
    split = datasets.split_folds(n, sizes)
    seen = np.concatenate([split.indices(f) for f in range(len(sizes))]) if n else np.array([], int)
    assert sorted(seen.tolist()) == list(range(n))
    for f, size in enumerate(sizes):
        tr, te = split.train_test(f)
        assert len(te) == size and len(tr) == n - size


@given(st.integers(1, 200), st.integers(1, 20))
def test_even_fold_sizes(n, k):
    sizes = datasets.even_fold_sizes(n, k)
    assert sum(sizes) == n and max(sizes) - min(sizes) <= 1


@settings(max_examples=20)
@given(st.integers(1, 100), st.integers(0, 2**31 - 1))
def test_noiseless_rings_exact_radius(n, seed):
    s = datasets.make_two_rings(n, noise_sigma=0.0, seed=seed)
    r = np.linalg.norm(s.points, axis=1)
    target = np.where(s.labels == 0, 0.5, 1.0)
    assert np.max(np.abs(r - target)) < 1e-12


def test_two_rings_balanced_and_deterministic():
    a = datasets.make_two_rings(250, seed=3)
    b = datasets.make_two_rings(250, seed=3)
    assert len(a) == 500 and np.bincount(a.labels).tolist() == [250, 250]
    assert np.array_equal(a.points, b.points)


def test_textures_shape_and_labels():
    s = datasets.make_textures(25, n_classes=5, seed=1)
    assert s.images.shape == (25, 32, 32, 3) and s.images.dtype == np.uint8
    assert np.bincount(s.labels).tolist() == [5] * 5

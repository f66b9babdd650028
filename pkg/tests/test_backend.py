import os
import subprocess
import sys

import numpy as np
import pytest

from besvm import _backend, _pycore

compiled = pytest.mark.skipif("cython" not in _backend.BACKENDS, reason="compiled extension not built")


def test_get_default_and_unknown():
    assert _backend.get() is _backend.kernels
    with pytest.raises(ValueError):
        _backend.get("fortran")


def test_pure_python_env_switch():
    env = dict(os.environ, BESVM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from besvm import _backend; print(_backend.NAME)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("BESVM_THREADS", "3")
    assert _backend.n_threads() == 3
    monkeypatch.setenv("BESVM_THREADS", "junk")
    assert _backend.n_threads() >= 1


@compiled
@pytest.mark.parametrize("h_r, h_l, lam", [(0, 0, 0.0), (1, 0, 0.0), (2, 1, 0.0), (1, 2, 0.3)])
def test_grid_gram_equivalent(rng, h_r, h_l, lam):
    A = rng.normal(size=(4, 3, 5, 6))
    B = rng.normal(size=(7, 4, 3, 6))
    a = _pycore.grid_gram(A, B, h_r, h_l, lam)
    b = _backend.BACKENDS["cython"].grid_gram(A, B, h_r, h_l, lam)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


@compiled
def test_dcd_sweep_equivalent(rng):
    X = rng.normal(size=(30, 4))
    y = np.sign(rng.normal(size=30))
    qd = np.einsum("ij,ij->i", X, X) + 0.5
    perm = rng.permutation(30).astype(np.int64)
    out = []
    for mod in (_pycore, _backend.BACKENDS["cython"]):
        alpha, w = np.zeros(30), np.zeros(4)
        for _ in range(3):
            pg = mod.dcd_sweep(X, y, alpha, w, qd, 0.5, np.inf, perm)
        out.append((alpha, w, pg))
    assert np.allclose(out[0][0], out[1][0], atol=1e-12) and np.allclose(out[0][1], out[1][1], atol=1e-12)
    assert np.allclose(out[0][2], out[1][2], atol=1e-12)


@compiled
def test_jacobi_equivalent(rng):
    A = rng.normal(size=(12, 12))
    A = A + A.T
    a = _pycore.jacobi(A.copy(), 1e-12, 50)
    b = _backend.BACKENDS["cython"].jacobi(A.copy(), 1e-12, 50)
    assert a[2] == b[2] and a[3] and b[3]
    assert np.allclose(np.sort(a[0]), np.sort(b[0]), atol=1e-10)

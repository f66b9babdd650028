"""Select the compiled kernels when they are importable.

Set ``BESVM_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _pycore

BACKENDS = {"python": _pycore}

try:
    from . import _core
except ImportError:  # extension not built
    _core = None
else:
    BACKENDS["cython"] = _core

if _core is not None and os.environ.get("BESVM_PURE_PYTHON", "").lower() not in ("1", "true", "yes"):
    NAME = "cython"
else:
    NAME = "python"

kernels = BACKENDS[NAME]


def get(name=None):
    """Return the kernel module for ``name`` (default: the active backend)."""
    if name is None:
        return kernels
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available; have {sorted(BACKENDS)}") from None


def n_threads():
    """Worker cap from BESVM_THREADS (default: cpu count)."""
    raw = os.environ.get("BESVM_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1

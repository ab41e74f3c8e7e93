"""Kernel backend selection.

The thresholding/prox kernels exist twice: a numba @njit version and a pure
numpy version.  ``TENRING_BACKEND=numpy`` (or ``numba``) forces one; the
default is numba when it imports, numpy otherwise.  ``TENRING_THREADS`` caps
worker counts for the CLI sweep pool; the solver itself is sequential.
"""

import os

_FORCED = None
_ACTIVE = None


def _resolve():
    name = _FORCED or os.environ.get("TENRING_BACKEND", "").strip().lower()
    if name not in ("", "numba", "numpy"):
        raise ValueError(f"TENRING_BACKEND must be 'numba' or 'numpy', got {name!r}")
    if name == "numpy":
        from . import _prox_numpy
        return _prox_numpy
    if name == "numba":
        from . import _prox_numba
        return _prox_numba
    try:
        from . import _prox_numba
        return _prox_numba
    except ImportError:
        from . import _prox_numpy
        return _prox_numpy


def kernels():
    """Return the active kernel module (cached)."""
    global _ACTIVE
    if _ACTIVE is None:
        _ACTIVE = _resolve()
    return _ACTIVE


def set_backend(name):
    """Force a backend ('numba', 'numpy' or None to re-resolve from env)."""
    global _FORCED, _ACTIVE
    _FORCED = name
    _ACTIVE = None


def backend_name():
    return "numba" if kernels().__name__.endswith("numba") else "numpy"


def worker_count():
    """Worker cap for parallel sweeps, from TENRING_THREADS (default 1)."""
    raw = os.environ.get("TENRING_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"TENRING_THREADS must be an integer, got {raw!r}")
    return max(1, n)

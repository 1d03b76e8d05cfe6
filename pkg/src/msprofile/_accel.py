"""Optional numba acceleration.

Set ``MSPROFILE_DISABLE_NUMBA=1`` before import to run every kernel as plain
numpy/Python. Both paths execute the same function bodies.
"""

from __future__ import annotations

import os

_DISABLED = os.environ.get("MSPROFILE_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by MSPROFILE_DISABLE_NUMBA")
    import numba as _numba

    HAS_NUMBA = True
except ImportError:
    _numba = None
    HAS_NUMBA = False


def jit(func=None, **kwargs):
    """``numba.njit(cache=True)`` when numba is active, otherwise identity."""

    def wrap(f):
        if not HAS_NUMBA:
            return f
        opts = {"cache": True, "nogil": True}
        opts.update(kwargs)
        return _numba.njit(**opts)(f)

    if func is None:
        return wrap
    return wrap(func)


def backend() -> str:
    return "numba" if HAS_NUMBA else "numpy"

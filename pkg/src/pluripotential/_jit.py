"""Numba toggle.

Hot float kernels are compiled with ``numba.njit`` unless the environment
variable ``PLURI_NUMBA`` is set to ``0`` (or numba is not importable), in
which case the pure-numpy implementations are used unchanged.
"""
from __future__ import annotations

import os

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("PLURI_NUMBA", "1") != "0"


def maybe_njit(fn):
    """Compile ``fn`` with numba when enabled; keep the Python original as ``py_func``."""
    if USE_NUMBA:
        compiled = numba.njit(cache=False, nogil=True)(fn)
        return compiled
    fn.py_func = fn
    return fn

"""Optional numba acceleration.

Kernels are written twice: a loop form compiled with ``numba.njit`` and a
vectorised numpy form.  ``DEFORMCAVITY_NUMBA=0`` forces the numpy path; the
numba path is otherwise used whenever numba imports cleanly.
"""
from __future__ import annotations

import os

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    NUMBA_AVAILABLE = False


def _env_enabled() -> bool:
    flag = os.environ.get("DEFORMCAVITY_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


USE_NUMBA = NUMBA_AVAILABLE and _env_enabled()


def njit(fn):
    """Compile ``fn`` with numba when available, else return it unchanged."""
    if not NUMBA_AVAILABLE:
        return fn
    return numba.njit(cache=True)(fn)


def select(numba_impl, numpy_impl):
    """Pick the implementation bound to the public kernel name."""
    return numba_impl if USE_NUMBA else numpy_impl


__all__ = ["NUMBA_AVAILABLE", "USE_NUMBA", "njit", "select"]

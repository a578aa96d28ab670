"""Numba switch.

Hot loops live in :mod:`risnoma.kernels` and :mod:`risnoma.special` in two
flavours: an explicit-loop version compiled with ``numba.njit`` and a
vectorized numpy version. Setting ``RISNOMA_DISABLE_NUMBA=1`` (or running
without numba installed) selects the numpy versions everywhere.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}

DISABLED_BY_ENV = os.environ.get("RISNOMA_DISABLE_NUMBA", "").strip().lower() not in _FALSY

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and not DISABLED_BY_ENV


def njit(func):
    """Compile ``func`` with numba when available, else return it unchanged.

    The loop versions are still importable without numba (they just run as
    slow pure Python), which keeps the kernels testable against each other.
    """
    if numba is None:  # pragma: no cover
        return func
    return numba.njit(cache=True, nogil=True)(func)


def backend():
    return "numba" if USE_NUMBA else "numpy"

"""Optional numba acceleration.

Every hot kernel in the package is written in the nopython subset and
decorated with :func:`njit` from this module.  Setting the environment
variable ``GIBBSTESS_DISABLE_NUMBA=1`` before import (or running without
numba installed) turns the decorator into the identity, so the very same
source runs as plain Python/numpy.  The two paths consume identical random
streams, which is what ``benchmarks/bench_kernels.py`` relies on.
"""

import logging
import os

_flag = os.environ.get("GIBBSTESS_DISABLE_NUMBA", "").strip().lower()
DISABLED = _flag not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and not DISABLED

if USE_NUMBA:
    logging.getLogger("numba").setLevel(logging.WARNING)


def njit(func=None, **kwargs):
    """``numba.njit(cache=True)`` or a no-op, depending on the backend."""
    if func is None:
        return lambda f: njit(f, **kwargs)
    if not USE_NUMBA:
        return func
    kwargs.setdefault("cache", True)
    return numba.njit(**kwargs)(func)


def backend():
    return "numba" if USE_NUMBA else "python"

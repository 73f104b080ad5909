"""Optional numba acceleration.

Set ``RANDLU_DISABLE_NUMBA=1`` to force the pure-numpy kernels, which is also
what happens when numba is not importable.
"""
import os

_FALSE = {"", "0", "false", "no", "off"}

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

HAS_NUMBA = numba is not None
USE_NUMBA = HAS_NUMBA and os.environ.get("RANDLU_DISABLE_NUMBA", "0").strip().lower() in _FALSE


def njit(func):
    """``numba.njit(cache=True)`` when numba is present, identity otherwise."""
    if not HAS_NUMBA:
        return func
    return numba.njit(cache=True)(func)


def backend():
    return "numba" if USE_NUMBA else "numpy"

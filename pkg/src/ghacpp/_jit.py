"""Numba toggle for the hot kernels.

Set ``GHACPP_DISABLE_NUMBA=1`` to force the pure-numpy code paths (useful for
debugging and for the kernel benchmark). If numba cannot be imported the
numpy paths are used automatically.
"""
import os

ENABLE_NUMBA = os.environ.get("GHACPP_DISABLE_NUMBA", "0").lower() not in ("1", "true", "yes")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    ENABLE_NUMBA = False

HAVE_NUMBA = numba is not None


def njit(func):
    """Compile ``func`` in nopython mode when numba is available, else return it."""
    if numba is None:
        return func
    return numba.njit(cache=True, nogil=True)(func)

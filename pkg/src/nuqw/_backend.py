"""Kernel backend selection.

Set ``NUQW_BACKEND=numpy`` to bypass numba and run the pure-numpy kernels.
The default is ``numba`` whenever the package imports cleanly.
"""
import os

_requested = os.environ.get("NUQW_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"NUQW_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and _requested == "numba"
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(fn):
    """``numba.njit`` with the project's compile flags, or a no-op without numba."""
    if not HAS_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)

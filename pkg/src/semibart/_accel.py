"""Backend selection for the compiled kernels.

Hot loops are written once in a numpy style that numba can compile.  Setting
``SEMIBART_DISABLE_NUMBA=1`` before import runs the very same functions as
plain Python + numpy, which is slower but has no compiler dependency.
A few primitives have a loop form for numba and a vectorized form for numpy;
those are wired through :func:`dispatch`.
"""

import os

_OFF = {"1", "true", "yes", "on"}

DISABLED = os.environ.get("SEMIBART_DISABLE_NUMBA", "").strip().lower() in _OFF

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and not DISABLED
BACKEND = "numba" if USE_NUMBA else "numpy"


def jit(func):
    """Compile ``func`` with ``numba.njit`` when the numba backend is active."""
    if USE_NUMBA:
        return numba.njit(cache=True)(func)
    return func


def dispatch(loop_impl, numpy_impl):
    """Pick the loop implementation (compiled) or the vectorized numpy one."""
    if USE_NUMBA:
        return numba.njit(cache=True)(loop_impl)
    return numpy_impl

"""Backend switch for the compiled kernels.

Set ``WEIGHTED_KELLY_DISABLE_NUMBA=1`` before import to force the pure-numpy
path. If numba cannot be imported the numpy path is used automatically.
"""

import os

_FLAG = "WEIGHTED_KELLY_DISABLE_NUMBA"


def _truthy(value):
    return value.strip().lower() not in ("", "0", "false", "no", "off")


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _truthy(os.environ.get(_FLAG, ""))
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(func):
    """Compile ``func`` with numba when available, else return it unchanged.

    Only used for the loop-style kernels; the dispatcher never routes to an
    uncompiled loop kernel when ``USE_NUMBA`` is false.
    """
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def thread_count(threads=None):
    """Worker count: explicit argument, then ``WEIGHTED_KELLY_THREADS``, then cpu count."""
    if threads is None:
        env = os.environ.get("WEIGHTED_KELLY_THREADS", "").strip()
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))

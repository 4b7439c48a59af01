"""Backend switch for the hot kernels.

Set ``ORDINAL_UQ_NO_NUMBA=1`` before import to force the pure-numpy path.
The numba path is also skipped silently when numba is not importable.
"""

import os

_DISABLED = os.environ.get("ORDINAL_UQ_NO_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError("numba disabled by ORDINAL_UQ_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def backend():
    return "numba" if HAVE_NUMBA else "numpy"

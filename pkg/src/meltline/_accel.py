"""Backend switch for the hot kernels.

Numba is used when importable unless ``MELTLINE_NO_NUMBA`` is set to a truthy
value, in which case the pure-numpy code paths in :mod:`meltline.kernels` run.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_FALSY = {"", "0", "false", "no", "off"}

NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("MELTLINE_NO_NUMBA", "").strip().lower() in _FALSY


def njit(*args, **kwargs):
    """``numba.njit`` when numba is installed, identity otherwise.

    Compilation is lazy, so decorating costs nothing when the numpy backend
    is selected.
    """
    if numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"

"""Numba switch.

Set ``VIDPRNU_DISABLE_NUMBA=1`` to force the pure-numpy kernels. When numba is
not importable the numpy kernels are used regardless.
"""
import functools
import os

_DISABLED = os.environ.get("VIDPRNU_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    from numba import njit as _numba_njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False
    _numba_njit = None

USE_NUMBA = NUMBA_AVAILABLE and not _DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, otherwise a no-op decorator."""
    if NUMBA_AVAILABLE:
        return _numba_njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def decorator(func):
        @functools.wraps(func)
        def wrapper(*a, **kw):
            return func(*a, **kw)

        return wrapper

    return decorator


def backend_name():
    return "numba" if USE_NUMBA else "numpy"

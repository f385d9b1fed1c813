"""Optional numba acceleration.

Hot kernels are written twice: a loop version compiled with numba and a
vectorised numpy version. Setting ``SUBLAP_NO_NUMBA=1`` (or running without
numba installed) selects the numpy path everywhere.
"""
import os

_flag = os.environ.get("SUBLAP_NO_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _flag not in ("", "0", "false", "no")

try:  # pragma: no cover - import guard
    import numba as _numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise a no-op decorator."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)

    def wrap(fn):
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"

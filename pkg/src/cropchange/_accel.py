"""Backend selection for the pixel kernels.

Numba is used when importable unless ``CROPCHANGE_DISABLE_NUMBA`` is set to a
truthy value, in which case every kernel runs its pure-numpy twin.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}


def _env_disabled():
    return os.environ.get("CROPCHANGE_DISABLE_NUMBA", "").strip().lower() not in _FALSY


try:
    from numba import njit as _numba_njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba_njit = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _env_disabled()


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator.

    The compiled function is always produced when numba is installed so the
    benchmark can compare both paths; ``USE_NUMBA`` only decides which one the
    public kernels dispatch to.
    """
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda func: func
    return _numba_njit(*args, **kwargs)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"

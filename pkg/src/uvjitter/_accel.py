"""Backend selection for the hot kernels.

Kernels come in two flavours: a numba ``@njit`` loop and a vectorised numpy
implementation.  Numba is used when it imports and ``UVJITTER_DISABLE_NUMBA``
is unset (or falsy).  Either backend can still be requested explicitly per
call, which is what the benchmark and the cross-backend tests do.
"""

import os

ENV_FLAG = "UVJITTER_DISABLE_NUMBA"

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None


def _flag_set(value):
    return value.strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = HAVE_NUMBA and not _flag_set(os.environ.get(ENV_FLAG, ""))

NUMBA_OPTS = {"cache": True, "nogil": True}


def njit(func=None, **opts):
    """``numba.njit`` when numba is importable, identity otherwise.

    Scalar helpers decorated with this are always safe to call from Python;
    with numba missing they simply run interpreted.
    """
    def wrap(f):
        if not HAVE_NUMBA:
            return f
        return numba.njit(**{**NUMBA_OPTS, **opts})(f)

    if func is not None:
        return wrap(func)
    return wrap


def default_backend():
    return "numba" if USE_NUMBA else "numpy"


def resolve_backend(backend=None):
    if backend is None:
        return default_backend()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend

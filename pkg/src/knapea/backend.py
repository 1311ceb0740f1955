"""Kernel backend selection.

The hot loops in kernels.py are written once and decorated with
`backend.kernel`.  Under the default backend ("numba") that decorator is
numba.njit with on-disk caching; under the "python" backend the same
functions run as plain Python over numpy scalars, wrapped in an errstate
that silences the uint64 wraparound warnings the RNG relies on.

The backend is chosen once per process from the KNAPEA_BACKEND
environment variable ("numba" or "python").  If numba is requested but
cannot be imported, the package falls back to the python backend with a
warning instead of failing; results are identical either way, only
speed differs.
"""

from __future__ import annotations

import functools
import os
import warnings

import numpy as np

from .errors import ConfigError

BACKEND_ENV_VAR = "KNAPEA_BACKEND"
_VALID = ("numba", "python")


def _choose_backend():
    mode = os.environ.get(BACKEND_ENV_VAR, "numba").strip().lower()
    if mode not in _VALID:
        raise ConfigError(
            f"{BACKEND_ENV_VAR} must be one of {_VALID}, got {mode!r}"
        )
    if mode == "numba":
        try:
            from numba import njit
        except ImportError:
            warnings.warn(
                "numba is not importable; falling back to the pure python backend",
                RuntimeWarning,
                stacklevel=2,
            )
            return "python", None
        return "numba", njit
    return "python", None


ACTIVE_BACKEND, _njit = _choose_backend()


def kernel(func):
    """Decorate a hot-loop function for the active backend."""
    if ACTIVE_BACKEND == "numba":
        return _njit(cache=True)(func)

    @functools.wraps(func)
    def wrapper(*args):
        with np.errstate(over="ignore"):
            return func(*args)

    return wrapper

"""Backend selection for the numeric kernels.

Every hot kernel ships twice: a numba ``@njit`` version and a plain numpy
version with identical arithmetic order. Set ``ROBOTSEM_DISABLE_NUMBA=1`` to
force the numpy path; it is also used when numba cannot be imported.
"""

from __future__ import annotations

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional speedup
    numba = None

ENV_FLAG = "ROBOTSEM_DISABLE_NUMBA"

HAVE_NUMBA = numba is not None


def _env_disabled() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


def default_backend() -> str:
    if HAVE_NUMBA and not _env_disabled():
        return "numba"
    return "numpy"


def resolve_backend(backend: str | None) -> str:
    """Map ``None``/``"auto"`` to the environment default and validate the rest."""
    if backend is None or backend == "auto":
        return default_backend()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise."""
    if numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)

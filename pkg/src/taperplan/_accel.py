"""Numba switch shared by every kernel module.

Set ``TAPERPLAN_DISABLE_JIT=1`` to run the pure-numpy implementations of the
hot loops instead of the compiled ones. The choice is made once, at import.
"""

import os

try:
    import numba as nb
except ImportError:  # pragma: no cover - numba is a hard dependency
    nb = None

_FLAG = os.environ.get("TAPERPLAN_DISABLE_JIT", "").strip().lower()
JIT_DISABLED = nb is None or _FLAG in ("1", "true", "yes", "on")

njit_kwargs = {
    "cache": True,
    "nogil": True,
}


def njit(func):
    """Compile ``func`` with numba when available, else return it unchanged.

    Kernels are always decorated, so the benchmark can call the compiled
    variant even when the process default is the numpy path.
    """
    if nb is None:
        return func
    return nb.njit(**njit_kwargs)(func)


def backend_name():
    return "numpy" if JIT_DISABLED else "numba"


def pick(compiled, fallback, backend=None):
    """Return the kernel for ``backend`` ("numba"/"numpy"), default per env flag."""
    if backend is None:
        backend = backend_name()
    if backend == "numba":
        if nb is None:
            raise RuntimeError("numba backend requested but numba is not installed")
        return compiled
    if backend == "numpy":
        return fallback
    raise ValueError(f"unknown backend {backend!r}")

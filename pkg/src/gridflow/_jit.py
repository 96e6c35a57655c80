"""Numba switch.

Kernels are written once in a numba-compatible subset of numpy. Setting
``GRIDFLOW_DISABLE_JIT=1`` (or running without numba installed) leaves them as
plain Python/numpy functions.
"""
import os

try:
    import numba as nb

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

JIT_DISABLED = (not HAVE_NUMBA) or os.environ.get("GRIDFLOW_DISABLE_JIT", "") not in ("", "0")


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity decorator otherwise.

    Usable bare (``@njit``) or with options (``@njit(cache=True)``).
    """
    if args and callable(args[0]) and len(args) == 1 and not kwargs:
        return njit()(args[0])
    if JIT_DISABLED:
        return lambda func: func
    kwargs.setdefault("cache", True)
    return nb.njit(*args, **kwargs)


def py_func(func):
    """The pure-Python body behind a (possibly) jitted kernel."""
    return getattr(func, "py_func", func)

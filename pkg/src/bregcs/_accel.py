"""Optional numba acceleration.

Hot kernels are decorated with :func:`jit`.  When numba is importable and the
environment variable ``BREGCS_DISABLE_NUMBA`` is unset (or ``0``), they are
compiled with ``numba.njit``; otherwise the decorator is the identity and the
same source runs as plain Python/numpy.
"""
import os

_disabled = os.environ.get("BREGCS_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError("numba disabled by BREGCS_DISABLE_NUMBA")
    import numba

    USING_NUMBA = True

    def jit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return numba.njit(*args, **kwargs)

except ImportError:
    USING_NUMBA = False

    def jit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


__all__ = ["USING_NUMBA", "jit"]

"""Backend selection for the hot numerical kernels.

Two implementations of each kernel exist: a numba-compiled one and a pure
numpy one. The environment variable ``VLC_LIMITS_BACKEND`` picks the path:

  * ``auto`` (default): numba when importable, numpy otherwise
  * ``numba``: force numba, raise if it cannot be imported
  * ``numpy``: force the pure numpy fallback

Both paths compute the same quantities; the benchmark script under
``benchmarks/`` compares them.
"""
from __future__ import annotations

import os

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        # Dummy decorator so kernel modules import cleanly without numba.
        def wrap(func):
            return func

        if len(args) == 1 and callable(args[0]):
            return args[0]
        return wrap


def resolve_backend() -> str:
    """Return the active backend name, honoring VLC_LIMITS_BACKEND."""
    choice = os.environ.get("VLC_LIMITS_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(
            f"VLC_LIMITS_BACKEND must be auto, numba or numpy, got {choice!r}"
        )
    if choice == "numba" and not NUMBA_AVAILABLE:
        raise ImportError("VLC_LIMITS_BACKEND=numba but numba is not importable")
    if choice == "auto":
        return "numba" if NUMBA_AVAILABLE else "numpy"
    return choice


def using_numba() -> bool:
    return resolve_backend() == "numba"

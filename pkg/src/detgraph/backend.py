"""Backend selection for the hot kernels.

``DETGRAPH_BACKEND`` chooses the execution path:

* ``auto`` (default) — numba-jit kernels when numba imports, numpy otherwise
* ``numba``          — require the jit path (falls back with a warning if numba
                       is unavailable)
* ``numpy``          — force the pure-Python/numpy fallback path
"""

from __future__ import annotations

import os
import warnings

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on numba-less installs
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def deco(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return deco


def backend_name() -> str:
    """Resolved backend: 'numba' or 'numpy'."""
    raw = os.environ.get("DETGRAPH_BACKEND", "auto").strip().lower()
    if raw not in ("auto", "numba", "numpy"):
        warnings.warn(f"unknown DETGRAPH_BACKEND={raw!r}, using 'auto'")
        raw = "auto"
    if raw == "numpy":
        return "numpy"
    if raw == "numba" and not HAS_NUMBA:
        warnings.warn("DETGRAPH_BACKEND=numba but numba is not importable; using numpy")
        return "numpy"
    return "numba" if HAS_NUMBA else "numpy"


def use_numba() -> bool:
    return backend_name() == "numba"

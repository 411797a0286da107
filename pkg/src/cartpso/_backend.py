"""Selects the compiled kernels when available, else the NumPy fallback.

Set ``CARTPSO_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("CARTPSO_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _kernels_py

rbf_gram = _impl.rbf_gram
smo_solve = _impl.smo_solve
split_scan = _impl.split_scan

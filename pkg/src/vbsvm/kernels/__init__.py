"""Hot loops, each in a numba and a pure-NumPy flavour.

The backend is chosen once at import from ``VBSVM_BACKEND`` (``numba`` or
``numpy``; default ``numba``). If numba cannot be imported the NumPy path is
used silently.
"""

import importlib
import os

_CHOICES = ("numba", "numpy")


def get_backend(name):
    """Kernel module for ``name``; raises ImportError if it is unavailable."""
    if name not in _CHOICES:
        raise ValueError(f"unknown backend {name!r}; choose one of {_CHOICES}")
    return importlib.import_module(f"{__name__}._{name}")


def _select():
    requested = os.environ.get("VBSVM_BACKEND", "numba").strip().lower() or "numba"
    if requested not in _CHOICES:
        raise ValueError(f"VBSVM_BACKEND must be one of {_CHOICES}, got {requested!r}")
    if requested == "numba":
        try:
            return "numba", get_backend("numba")
        except ImportError:
            pass
    return "numpy", get_backend("numpy")


BACKEND, _impl = _select()

sparse_local_updates = _impl.sparse_local_updates
sparse_gibbs_gamma_scan = _impl.sparse_gibbs_gamma_scan
missing_vb_rows = _impl.missing_vb_rows
missing_gibbs_rows = _impl.missing_gibbs_rows

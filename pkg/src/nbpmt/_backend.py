"""Select the kernel backend at import time.

The compiled ``_core`` extension is used when it is importable; setting
``NBPMT_PURE_PYTHON=1`` forces the pure Python fallback.
"""

import importlib
import os


def load(name=None):
    """Return a backend module by name (``"cython"`` or ``"python"``), or the default."""
    if name == "python":
        return importlib.import_module("nbpmt._fallback")
    if name == "cython":
        return importlib.import_module("nbpmt._core")
    if name is not None:
        raise ValueError(f"unknown backend {name!r}")
    if os.environ.get("NBPMT_PURE_PYTHON"):
        return load("python")
    try:
        return load("cython")
    except ImportError:
        return load("python")


kernels = load()
BACKEND = kernels.NAME

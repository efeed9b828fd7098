"""Kernel backend selection.

The compiled extension is preferred; the numpy module is the fallback.
Set ``GRNNDELAY_BACKEND=python`` to force the fallback, or ``=cython`` to
fail loudly if the extension is missing.
"""
import importlib
import os

from . import _kernels_py

_ENV = "GRNNDELAY_BACKEND"


def load(name=None):
    """Return the kernel module for ``name`` ('cython', 'python' or None=auto)."""
    if name == "python":
        return _kernels_py
    try:
        return importlib.import_module("grnndelay._ckernels")
    except ImportError:
        if name == "cython":
            raise
        return _kernels_py


def available():
    names = ["python"]
    try:
        importlib.import_module("grnndelay._ckernels")
    except ImportError:
        return names
    return ["cython"] + names


kernels = load(os.environ.get(_ENV) or None)
BACKEND = "python" if kernels is _kernels_py else "cython"

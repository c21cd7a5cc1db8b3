"""Kernel backend selection.

The compiled extension is used when importable. Set ``PROXAS_BACKEND=python``
to force the pure-Python kernels.
"""
import os

BACKEND = "python"
if os.environ.get("PROXAS_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as kernels

        BACKEND = "cython"
    except ImportError:  # extension not built
        kernels = None
if BACKEND == "python":
    from . import _kernels_py as kernels  # noqa: F811

__all__ = ["BACKEND", "kernels"]

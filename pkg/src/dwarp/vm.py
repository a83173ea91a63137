"""Backend selection for the expression register machine.

The compiled ``_vm`` extension is used when it was built; otherwise the
pure-Python ``_vm_py`` is used.  Set ``DWARP_BACKEND=python`` to force the
fallback (useful for benchmarking and for cross-checking the two).
"""
from __future__ import annotations

import importlib
import os

__all__ = ["BACKEND", "available_backends", "load_backend", "run", "run_batch"]

_MODULES = {"cython": "dwarp._vm", "python": "dwarp._vm_py"}


def load_backend(name: str):
    """Import and return the backend module called ``name`` ("cython" or "python")."""
    try:
        return importlib.import_module(_MODULES[name])
    except KeyError:
        raise ValueError(f"unknown backend {name!r}") from None


def available_backends() -> list[str]:
    names = []
    for name in _MODULES:
        try:
            load_backend(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select():
    requested = os.environ.get("DWARP_BACKEND", "").strip().lower()
    if requested in ("python", "py", "pure"):
        return "python", load_backend("python")
    try:
        return "cython", load_backend("cython")
    except ImportError:
        if requested == "cython":
            raise
        return "python", load_backend("python")


BACKEND, _impl = _select()
run = _impl.run
run_batch = _impl.run_batch

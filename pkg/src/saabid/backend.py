"""Kernel backend selection.

The default backend is numba; setting ``SAABID_BACKEND=numpy`` selects the
pure-numpy fallback (also used automatically when numba is missing).
``benchmarks/benchmark_backends.py`` compares the two.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import kernels_numpy

try:
    from . import kernels_numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    kernels_numba = None
    HAS_NUMBA = False

_ENV_VAR = "SAABID_BACKEND"


def backend_name() -> str:
    choice = os.environ.get(_ENV_VAR, "").strip().lower()
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("SAABID_BACKEND=numba but numba is not importable")
        return "numba"
    if choice:
        raise RuntimeError(f"unknown {_ENV_VAR} value: {choice!r} (use 'numba' or 'numpy')")
    return "numba" if HAS_NUMBA else "numpy"


def get_kernels(name: str | None = None) -> ModuleType:
    name = name or backend_name()
    if name == "numba":
        if kernels_numba is None:
            raise RuntimeError("numba backend requested but numba is not importable")
        return kernels_numba
    return kernels_numpy


def use_fused_search() -> bool:
    """The fused numba search kernel is used whenever the backend allows."""
    return backend_name() == "numba"

"""Kernel backend selection.

The hot per-record loop (span partitioning, Eq-style mask probabilities,
Bernoulli decisions) has two interchangeable implementations: a numba
@njit build and a pure-Python/numpy fallback. Both produce bit-identical
results; SIMPLECORPUS_KERNELS=numpy|numba picks one explicitly, otherwise
numba is used when importable. benchmarks/bench_kernels.py compares them.
"""

from __future__ import annotations

import os
import warnings

from . import pure

_requested = os.environ.get("SIMPLECORPUS_KERNELS", "").strip().lower()

if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"SIMPLECORPUS_KERNELS must be 'numba' or 'numpy', got {_requested!r}"
    )

_backend = pure
if _requested != "numpy":
    try:
        from . import jit as _jit_mod

        _backend = _jit_mod
    except ImportError:
        if _requested == "numba":
            raise
        warnings.warn("numba unavailable, falling back to numpy kernels")

partition_lengths = _backend.partition_lengths
corrupt_plan = _backend.corrupt_plan


def backend_name() -> str:
    return _backend.NAME


def warmup() -> None:
    """Compile the active backend's kernels if it has a JIT stage."""
    hook = getattr(_backend, "warmup", None)
    if hook is not None:
        hook()


def get_backend(name: str):
    """Fetch a backend module by name regardless of the active selection."""
    if name == "numpy":
        return pure
    if name == "numba":
        from . import jit

        return jit
    raise ValueError(f"unknown kernel backend: {name!r}")

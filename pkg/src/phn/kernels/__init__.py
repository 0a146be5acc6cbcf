"""Numeric kernels with a compiled core and a pure-Python fallback.

The compiled extension (Cython) is preferred; if it is missing, or if
``PHN_PURE_PYTHON`` is set in the environment, the pure-Python versions
take over. Both produce bit-identical results (same loop order, same
IEEE-754 operations), so backend choice never changes any output.

``benchmarks/bench_kernels.py`` compares the two backends.
"""

from __future__ import annotations

import importlib
import os

import numpy as np

from . import pure

_fast = None
if not os.environ.get("PHN_PURE_PYTHON"):
    try:
        _fast = importlib.import_module("phn.kernels._fast")
    except ImportError:
        _fast = None

BACKEND = "compiled" if _fast is not None else "pure"


def trailing_mean(values, window: int) -> np.ndarray:
    """Trailing-window mean at every index; short windows at the start."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if window < 1:
        raise ValueError("window must be >= 1")
    if _fast is not None:
        return _fast.trailing_mean(arr, window)
    return np.asarray(pure.trailing_mean(arr.tolist(), window), dtype=np.float64)


def impulse_response(doses, tau: float) -> np.ndarray:
    """Decayed-dose sums out[t] = sum_{s<t} doses[s]*exp(-(t-s)/tau)."""
    arr = np.ascontiguousarray(doses, dtype=np.float64)
    if tau <= 0:
        raise ValueError("tau must be positive")
    if _fast is not None:
        return _fast.impulse_response(arr, float(tau))
    return np.asarray(pure.impulse_response(arr.tolist(), float(tau)), dtype=np.float64)


def impulse_value(doses, tau: float) -> float:
    """Decayed-dose sum evaluated one step past the end of the series."""
    arr = np.ascontiguousarray(doses, dtype=np.float64)
    if tau <= 0:
        raise ValueError("tau must be positive")
    if _fast is not None:
        return float(_fast.impulse_value(arr, float(tau)))
    return float(pure.impulse_value(arr.tolist(), float(tau)))


def group_minutes(minutes, max_gap: int, min_len: int) -> list[tuple[int, int]]:
    """Group sorted minute indices into gap-bridged runs of >= min_len."""
    arr = np.ascontiguousarray(minutes, dtype=np.int64)
    if _fast is not None:
        return _fast.group_minutes(arr, int(max_gap), int(min_len))
    return pure.group_minutes(arr.tolist(), int(max_gap), int(min_len))

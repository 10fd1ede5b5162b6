"""Small input-validation helpers used by constructors and estimator code."""

from __future__ import annotations

import numbers

import numpy as np

from .errors import ValidationError


def check_positive_scalar(value, name: str) -> float:
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_in_range(value, name: str, lo: float, hi: float, *,
                   include_lo: bool = True, include_hi: bool = True) -> float:
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValidationError(f"{name} must be a finite number, got {value!r}")
    value = float(value)
    ok_lo = value >= lo if include_lo else value > lo
    ok_hi = value <= hi if include_hi else value < hi
    if not (ok_lo and ok_hi):
        lb = "[" if include_lo else "("
        rb = "]" if include_hi else ")"
        raise ValidationError(f"{name} must lie in {lb}{lo}, {hi}{rb}, got {value}")
    return value


def as_grid(values, shape: tuple[int, int], name: str) -> np.ndarray:
    """Coerce a scalar or array to a float64 grid of the given shape."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(shape, float(arr))
    if arr.shape != shape:
        raise ValidationError(f"{name} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr

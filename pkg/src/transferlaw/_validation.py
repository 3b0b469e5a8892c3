"""Small input-validation helpers used by the public functions and estimators."""
from __future__ import annotations

import numbers

import numpy as np

from .exceptions import ValidationError


def check_scalar(value, name, *, min_val=None, max_val=None, include_min=True,
                 include_max=True, integer=False):
    """Validate a real scalar and return it as float (or int)."""
    if integer:
        if isinstance(value, bool) or not isinstance(value, numbers.Integral):
            raise ValidationError(f"{name} must be an integer, got {value!r}")
        value = int(value)
    else:
        if isinstance(value, bool) or not isinstance(value, numbers.Real):
            raise ValidationError(f"{name} must be a real number, got {value!r}")
        value = float(value)
        if not np.isfinite(value):
            raise ValidationError(f"{name} must be finite, got {value!r}")
    if min_val is not None:
        if value < min_val or (value == min_val and not include_min):
            op = ">=" if include_min else ">"
            raise ValidationError(f"{name} must be {op} {min_val}, got {value!r}")
    if max_val is not None:
        if value > max_val or (value == max_val and not include_max):
            op = "<=" if include_max else "<"
            raise ValidationError(f"{name} must be {op} {max_val}, got {value!r}")
    return value


def as_float_array(x, name, *, ndim=None, positive=False, min_val=None):
    """Convert to a finite float64 array, optionally checking positivity."""
    arr = np.asarray(x, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    if positive and np.any(arr <= 0):
        idx = int(np.flatnonzero(arr.ravel() <= 0)[0])
        raise ValidationError(f"{name} must be strictly positive (index {idx} is {arr.ravel()[idx]!r})")
    if min_val is not None and np.any(arr < min_val):
        idx = int(np.flatnonzero(arr.ravel() < min_val)[0])
        raise ValidationError(f"{name} must be >= {min_val} (index {idx} is {arr.ravel()[idx]!r})")
    return arr


def check_unit_rows(x, name="x", atol=1e-8):
    """Check that every row of ``x`` has unit Euclidean norm."""
    x = as_float_array(x, name)
    x2 = np.atleast_2d(x)
    norms = np.linalg.norm(x2, axis=-1)
    bad = np.abs(norms - 1.0) > atol
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise ValidationError(f"{name} must lie on the unit sphere (row {i} has norm {norms[i]:.12g})")
    return x

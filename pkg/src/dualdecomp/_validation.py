"""Small input validation helpers in the spirit of ``sklearn.utils.validation``."""

import numbers

import numpy as np


def as_float_vector(x, size=None, name="x"):
    """Return ``x`` as a 1-D float64 array, optionally checking its length."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise ValueError(f"{name} must have length {size}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_float_matrix(a, shape=None, name="matrix"):
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f"{name} must have shape {tuple(shape)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_scalar(x, name, *, min_val=None, max_val=None, include_min=True,
                 include_max=True, integer=False):
    """Validate a scalar parameter and return it as ``int`` or ``float``."""
    if integer:
        if isinstance(x, bool) or not isinstance(x, numbers.Integral):
            raise TypeError(f"{name} must be an integer, got {x!r}")
        x = int(x)
    else:
        if isinstance(x, bool) or not isinstance(x, numbers.Real):
            raise TypeError(f"{name} must be a real number, got {x!r}")
        x = float(x)
        if not np.isfinite(x):
            raise ValueError(f"{name} must be finite, got {x!r}")
    if min_val is not None:
        if (x < min_val) if include_min else (x <= min_val):
            op = ">=" if include_min else ">"
            raise ValueError(f"{name} must be {op} {min_val}, got {x}")
    if max_val is not None:
        if (x > max_val) if include_max else (x >= max_val):
            op = "<=" if include_max else "<"
            raise ValueError(f"{name} must be {op} {max_val}, got {x}")
    return x


def frozen(arr):
    """Return a read-only view so shared instances stay immutable."""
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr

"""Input validation helpers shared by the public entry points.

All helpers return float64 arrays so downstream numerics run in double
precision regardless of the caller's dtype.
"""

import numpy as np

from .errors import NonFinite, ShapeMismatch


def check_matrix(a, name="array", min_rows=1, min_cols=1):
    """Coerce ``a`` to a 2-D float64 array and verify finiteness."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got shape {a.shape}")
    if a.shape[0] < min_rows or a.shape[1] < min_cols:
        raise ShapeMismatch(
            f"{name} must be at least {min_rows}x{min_cols}, got {a.shape[0]}x{a.shape[1]}"
        )
    if not np.all(np.isfinite(a)):
        raise NonFinite(f"{name} contains NaN or infinite entries")
    return a


def check_vector(a, name="array", min_len=1):
    """Coerce ``a`` to a 1-D float64 array and verify finiteness."""
    a = np.asarray(a, dtype=np.float64).ravel()
    if a.size < min_len:
        raise ShapeMismatch(f"{name} needs at least {min_len} entries, got {a.size}")
    if not np.all(np.isfinite(a)):
        raise NonFinite(f"{name} contains NaN or infinite entries")
    return a


def check_same_shape(a, b, names=("first", "second")):
    if a.shape != b.shape:
        raise ShapeMismatch(
            f"{names[0]} shape {a.shape} != {names[1]} shape {b.shape}"
        )


def check_binary(a, name="mask"):
    """Verify every entry of ``a`` is 0 or 1; returns a float64 copy."""
    a = np.asarray(a, dtype=np.float64)
    if not np.all((a == 0.0) | (a == 1.0)):
        raise ShapeMismatch(f"{name} must contain only 0/1 entries")
    return a


def readonly(a):
    """Return a float64 copy of ``a`` with the writeable flag cleared."""
    out = np.array(a, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out

"""Input validation helpers shared by the public entry points."""

import numbers

import numpy as np

from .exceptions import (
    DimensionMismatch,
    NegativeCovariate,
    ValidationError,
)


def check_square_matrix(a, name, *, symmetric=False, nonnegative=True):
    """Return ``a`` as a float n x n array with a zero diagonal check."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be a square matrix, got shape {a.shape}")
    if a.shape[0] < 2:
        raise DimensionMismatch(f"{name} needs at least two individuals")
    if np.isnan(a).any():
        raise ValidationError(f"{name} contains NaN")
    if nonnegative and (a < 0).any():
        raise ValidationError(f"{name} has negative entries")
    if np.any(np.diag(a) != 0):
        raise ValidationError(f"{name} must have a zero diagonal")
    if symmetric and not np.array_equal(a, a.T):
        raise ValidationError(f"{name} must be symmetric")
    return a


def check_covariates(x, n, name):
    """Covariates are stored one column per individual (p x n)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != n:
        raise DimensionMismatch(f"{name} must be p x {n}, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValidationError(f"{name} must be finite")
    if (x < 0).any():
        raise NegativeCovariate(f"{name} has negative entries")
    return x


def check_positive(value, name, *, allow_zero=False):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValidationError(f"{name} must be a finite real, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ValidationError(f"{name} must be {bound}, got {value!r}")
    return float(value)


def check_positive_vector(values, name, size=None):
    v = np.atleast_1d(np.asarray(values, dtype=float))
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be a vector")
    if size is not None and v.size != size:
        raise DimensionMismatch(f"{name} must have {size} entries, got {v.size}")
    if not np.isfinite(v).all() or (v <= 0).any():
        raise ValidationError(f"{name} entries must be finite and > 0")
    return v


def check_locations(loc):
    loc = np.asarray(loc, dtype=float)
    if loc.ndim != 2 or loc.shape[1] != 2:
        raise DimensionMismatch(f"locations must be n x 2, got shape {loc.shape}")
    if loc.shape[0] < 2:
        raise DimensionMismatch("locations need at least two individuals")
    if not np.isfinite(loc).all():
        raise ValidationError("locations must be finite")
    return loc

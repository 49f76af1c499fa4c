"""Small input-checking helpers shared by the public functions and estimators."""

import numbers

import numpy as np

from .exceptions import UsageError


def check_count(value, name, minimum):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise UsageError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise UsageError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise UsageError(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_margin(margin):
    margin = float(margin)
    if not 0.0 <= margin < 1.0:
        raise UsageError(f"margin must lie in [0, 1), got {margin!r}")
    return margin


def check_point(x, dim, name="x"):
    """Return ``x`` as a float vector of length ``dim``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise UsageError(f"{name} must have shape ({dim},), got {x.shape}")
    return x


def check_points(X, dim, name="X"):
    """Return ``X`` as an (n, dim) float array; a single point is promoted."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != dim:
        raise UsageError(f"{name} must have shape (n, {dim}), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise UsageError(f"{name} contains non-finite values")
    return X


def frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a

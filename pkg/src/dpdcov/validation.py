"""Input validation helpers used by estimators and the CLI."""

import numpy as np

from .exceptions import DegenerateDataError, ValidationError


def check_beta(beta):
    """Validate the robustness tuning parameter and return it as a float.

    The estimators are defined for ``0 <= beta <= 1``; ``beta == 0`` is the
    maximum-likelihood limit and is handled exactly, never as a small positive
    value.
    """
    beta = float(beta)
    if not np.isfinite(beta) or beta < 0.0 or beta > 1.0:
        raise ValidationError(f"beta must lie in [0, 1], got {beta}")
    return beta


def check_vector(x, min_len=1, name="x"):
    """Return ``x`` as a 1-D float array of finite values."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {x.shape}")
    if x.size < min_len:
        raise ValidationError(f"{name} needs at least {min_len} observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise ValidationError(f"{name} contains a non-finite value at index {bad}")
    return x


def check_data_matrix(X, min_rows=2, name="X"):
    """Return ``X`` as an (n, p) float matrix of finite values."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValidationError(f"{name} must be a 2-D matrix, got shape {X.shape}")
    n, p = X.shape
    if n < min_rows:
        raise ValidationError(f"{name} needs at least {min_rows} rows, got {n}")
    if p < 1:
        raise ValidationError(f"{name} needs at least one column")
    if not np.all(np.isfinite(X)):
        i, j = np.argwhere(~np.isfinite(X))[0]
        raise ValidationError(f"{name} contains a non-finite value at row {i}, column {j}")
    return X


def check_no_constant_columns(X, name="X"):
    """Raise :class:`DegenerateDataError` naming the first constant column."""
    spread = X.max(axis=0) - X.min(axis=0)
    if np.any(spread == 0.0):
        j = int(np.flatnonzero(spread == 0.0)[0])
        raise DegenerateDataError(f"column {j} of {name} is constant")


def check_symmetric_unit_diagonal(R, tol=1e-12, name="R"):
    """Validate a square symmetric matrix with unit diagonal (within ``tol``)."""
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise ValidationError(f"{name} contains non-finite entries")
    if np.max(np.abs(R - R.T)) > tol:
        raise ValidationError(f"{name} is not symmetric within tolerance {tol}")
    if np.max(np.abs(np.diag(R) - 1.0)) > tol:
        raise ValidationError(f"{name} does not have a unit diagonal within tolerance {tol}")
    return R

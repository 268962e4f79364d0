"""Input validation helpers shared by the estimator-facing surfaces."""
from __future__ import annotations

import numpy as np

from .errors import NumericError


def as_float_matrix(X, name: str) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NumericError(f"{name} contains non-finite values")
    return X


def as_float_vector(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NumericError(f"{name} contains non-finite values")
    return v


def check_labels(y, n_rows: int, name: str) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != n_rows:
        raise ValueError(f"{name} must be 1-D with {n_rows} entries, got shape {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        rounded = np.asarray(y, dtype=np.int64)
        if not np.array_equal(rounded, y):
            raise ValueError(f"{name} must hold integer class indices")
        y = rounded
    y = y.astype(np.int64)
    if y.min() < 0:
        raise ValueError(f"{name} contains negative class indices")
    return y


def check_unit_rows(X: np.ndarray, tol: float, name: str) -> None:
    norms = np.linalg.norm(X, axis=1)
    worst = float(np.abs(norms - 1.0).max())
    if worst > tol:
        raise ValueError(f"{name} rows must be unit-norm within {tol}, worst deviation {worst:.2e}")

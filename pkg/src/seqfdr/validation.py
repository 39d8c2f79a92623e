"""Input validation helpers for the estimator front end."""

from __future__ import annotations

import numpy as np

__all__ = ["check_statistic_matrix", "split_statistic_matrix"]


def check_statistic_matrix(X, *, min_columns: int = 2) -> np.ndarray:
    """Coerce ``X`` to a finite 2-D float array with enough columns.

    The estimator convention puts the test statistic in the first column
    and the covariates in the remaining ones, so at least two columns are
    required.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {X.shape}")
    if X.shape[0] < 1:
        raise ValueError("need at least one row")
    if X.shape[1] < min_columns:
        raise ValueError(
            f"need at least {min_columns} columns (statistic plus covariates), "
            f"got {X.shape[1]}"
        )
    if not np.all(np.isfinite(X)):
        raise ValueError("all entries must be finite")
    return X


def split_statistic_matrix(X) -> tuple[np.ndarray, np.ndarray]:
    """Split a checked matrix into ``(z, covariates)``."""
    X = check_statistic_matrix(X)
    return X[:, 0].copy(), X[:, 1:].copy()

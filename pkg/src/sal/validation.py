"""Input validation helpers for the estimator-facing API."""
from __future__ import annotations

import numpy as np


def as_sample_matrix(X) -> np.ndarray:
    """Coerce to a finite, non-empty float64 (n, d) matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        raise ValueError("expected a 2-D sample matrix; reshape 1-D input to (n, 1)")
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError(f"expected a non-empty 2-D sample matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("sample matrix contains NaN or infinity")
    return X


def as_label_vector(y, n_rows: int) -> np.ndarray:
    """Coerce to an integer label vector matching ``n_rows``."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"labels must be 1-D, got shape {y.shape}")
    if y.shape[0] != n_rows:
        raise ValueError(f"{n_rows} samples but {y.shape[0]} labels")
    if y.dtype.kind == "f":
        if not np.all(y == np.round(y)):
            raise ValueError("labels must be integers")
        y = y.astype(np.int64)
    elif y.dtype.kind in "iub":
        y = y.astype(np.int64)
    else:
        raise ValueError(f"labels must be numeric, got dtype {y.dtype}")
    return y


def check_feature_count(X: np.ndarray, expected: int) -> None:
    if X.shape[1] != expected:
        raise ValueError(f"X has {X.shape[1]} features, but the model was fit with {expected}")

"""Input coercion shared by the estimators."""

from __future__ import annotations

import numpy as np
import pandas as pd
from sklearn.utils import check_array

from .exceptions import DataError


def as_observations(data, names=None) -> tuple[np.ndarray, tuple]:
    """Return ``(Y, names)`` with ``Y`` of shape (n_samples, n_features).

    Accepts a ReturnPanel (stored factor-major), a DataFrame, or array-like
    data already in sample-major layout. One-dimensional input is treated as
    a single feature.
    """
    from .panel import ReturnPanel

    if isinstance(data, ReturnPanel):
        Y = data.to_array()
        names = data.names if names is None else names
    else:
        if isinstance(data, pd.DataFrame) and names is None:
            names = tuple(str(c) for c in data.columns)
        arr = np.asarray(data, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        try:
            Y = check_array(arr, dtype=float, ensure_min_samples=2)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
    if names is None:
        names = tuple(f"x{i}" for i in range(Y.shape[1]))
    names = tuple(str(n) for n in names)
    if len(names) != Y.shape[1]:
        raise DataError(f"{len(names)} names for {Y.shape[1]} features")
    return Y, names

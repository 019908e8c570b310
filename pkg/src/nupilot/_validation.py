"""Input checks shared by the estimator wrappers."""

import numpy as np


def check_complex_array(X, n_cols=None, name="X", ndim=(2,)):
    """Coerce ``X`` to a complex ndarray, checking rank, last-axis length and finiteness."""
    arr = np.asarray(X)
    if arr.dtype == object:
        raise TypeError(f"{name} must be numeric")
    arr = arr.astype(complex, copy=False)
    if arr.ndim == 1 and 2 in ndim:
        arr = arr[None, :]
    if arr.ndim not in ndim:
        raise ValueError(f"{name} must have ndim in {ndim}, got {arr.ndim}")
    if n_cols is not None and arr.shape[-1] != n_cols:
        raise ValueError(f"{name} has {arr.shape[-1]} columns, expected {n_cols}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or inf")
    return arr


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or int(value) != value or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)

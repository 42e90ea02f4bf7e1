"""Input checks shared by the estimator classes."""
from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import ParameterError
from .weights import WeightSpec, parse_weight


def check_weight(weight) -> WeightSpec:
    """Accept a :class:`WeightSpec` or its string form such as ``"bump:p=1,q=2"``."""
    if isinstance(weight, WeightSpec):
        return weight
    if isinstance(weight, str):
        return parse_weight(weight)
    raise ParameterError(f"weight must be a WeightSpec or a string, got {type(weight).__name__}")


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise ParameterError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_samples(X, allow_complex=False, min_samples=2):
    """2-D finite sample array, one row per time step."""
    X = np.asarray(X)
    if allow_complex and np.iscomplexobj(X):
        if X.ndim == 1:
            X = X[:, None]
        if not np.all(np.isfinite(X)):
            raise ValueError("Input contains NaN or infinity.")
        if X.shape[0] < min_samples:
            raise ValueError(f"at least {min_samples} samples are required")
        return X
    return check_array(X, ensure_2d=False, ensure_min_samples=min_samples, dtype=float).reshape(len(X), -1)


def check_series(x, min_length=1):
    """1-D finite float array."""
    x = check_array(np.asarray(x, dtype=float).reshape(-1, 1), ensure_min_samples=min_length).ravel()
    return x

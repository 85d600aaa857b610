"""Input validation helpers shared by the estimators."""

import inspect

import numpy as np

from .exceptions import ArgumentError, NumericError, SchemaError


def check_matrix(X, name="X", allow_empty=False):
    """Coerce to a C-contiguous 2-D float64 array and verify finiteness."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise SchemaError(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] == 0 and not allow_empty:
        raise ArgumentError(f"{name} has no rows")
    if X.size and not np.all(np.isfinite(X)):
        raise NumericError(f"{name} contains non-finite values")
    return X


def check_vector(y, n_rows, name="y"):
    y = np.ascontiguousarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != n_rows:
        raise SchemaError(f"{name} has {y.shape[0]} entries, expected {n_rows}")
    if y.size and not np.all(np.isfinite(y)):
        raise NumericError(f"{name} contains non-finite values")
    return y


def check_width(X, expected, name="X"):
    if X.shape[1] != expected:
        raise SchemaError(f"{name} has {X.shape[1]} columns, model expects {expected}")


def check_codes(y, n_classes, name="y"):
    y = np.asarray(y)
    codes = y.astype(np.int64)
    if y.size and not np.array_equal(codes, np.asarray(y, dtype=np.float64)):
        raise ArgumentError(f"{name} must hold integer class codes")
    if y.size and (codes.min() < 0 or codes.max() >= n_classes):
        raise ArgumentError(f"{name} codes outside [0, {n_classes})")
    return codes


class ParamsMixin:
    """Minimal sklearn-style get_params/set_params over __init__ keywords."""

    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [p for p in sig.parameters if p != "self"]

    def get_params(self, deep=True):
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ArgumentError(f"unknown parameter {key!r} for {type(self).__name__}")
            setattr(self, key, value)
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"

"""Input validation helpers shared by the estimators."""

import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ConfigurationError


def check_features(X, n_features=None):
    """Validate a 2-D float64 feature matrix, optionally of a fixed width."""
    X = check_array(X, dtype=np.float64, ensure_all_finite=True)
    if n_features is not None and X.shape[1] != n_features:
        raise ConfigurationError(
            f"expected {n_features} features, got {X.shape[1]}"
        )
    return X


def check_sample(x, n_features):
    """Fast path for a single stream instance; returns a (1, d) array."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if x.shape[1] != n_features:
        raise ConfigurationError(
            f"expected {n_features} features, got {x.shape[1]}"
        )
    if not np.isfinite(x).all():
        raise ConfigurationError("instance contains NaN or Inf")
    return x


def check_scalar(value, name, target_type=numbers.Real, *, low=None, high=None,
                 include_low=True, include_high=True):
    if not isinstance(value, target_type) or isinstance(value, bool):
        raise ConfigurationError(f"{name} must be {target_type.__name__}, got {value!r}")
    if low is not None and (value < low or (value == low and not include_low)):
        raise ConfigurationError(f"{name}={value} is below its allowed range")
    if high is not None and (value > high or (value == high and not include_high)):
        raise ConfigurationError(f"{name}={value} is above its allowed range")
    return value


def check_layers(layers, name):
    layers = tuple(int(n) for n in layers)
    if not layers or any(n < 1 for n in layers):
        raise ConfigurationError(f"{name} must be a non-empty list of positive widths")
    return layers


def as_generator(random_state):
    """Turn None / int / Generator into a numpy Generator."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)

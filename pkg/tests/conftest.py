import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def numeric_grad(f, params, h=1e-5):
    """Central finite differences of ``f()`` w.r.t. the flat array ``params`` (in place)."""
    grad = np.zeros_like(params)
    for i in range(len(params)):
        old = params[i]
        params[i] = old + h
        up = f()
        params[i] = old - h
        down = f()
        params[i] = old
        grad[i] = (up - down) / (2 * h)
    return grad


def max_rel_error(analytic, numeric, floor=1e-8):
    scale = np.maximum(np.abs(analytic) + np.abs(numeric), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))

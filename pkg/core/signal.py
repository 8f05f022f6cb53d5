"""
Vector kernels for the truncated autoconvolution problem.

Signals are nonnegative float64 vectors indexed 0..n and implicitly extended by
zeros outside that range. All kernels are direct O(n^2) sums.
"""
import math

import numpy as np
from scipy.special import kl_div

from core.exceptions import DegenerateDenominatorError, InvalidSignalError, LengthMismatchError

# Signals travel as plain numpy arrays; `as_signal` is the validating constructor.
Signal = np.ndarray


def as_signal(values, name: str = "signal") -> Signal:
    """Validate `values` as a Signal and return a read-only float64 copy."""
    array = np.array(values, dtype=np.float64)
    if array.ndim != 1:
        raise InvalidSignalError(f"{name} must be one-dimensional, got shape {array.shape}")
    if array.size == 0:
        raise InvalidSignalError(f"{name} must have at least one entry")
    if not np.all(np.isfinite(array)):
        raise InvalidSignalError(f"{name} has non-finite entries")
    if np.any(array < 0):
        index = int(np.flatnonzero(array < 0)[0])
        raise InvalidSignalError(
            f"{name} has a negative entry at index {index}",
            details={"index": index, "value": float(array[index])},
        )
    array.setflags(write=False)
    return array


def _check_lengths(u: np.ndarray, v: np.ndarray) -> None:
    if u.shape != v.shape:
        raise LengthMismatchError(u.size, v.size)


def autoconvolve(x) -> Signal:
    """Full autoconvolution, length 2n+1."""
    x = np.asarray(x, dtype=np.float64)
    return np.convolve(x, x)


def autoconvolve_truncated(x) -> Signal:
    """Autoconvolution restricted to indices 0..n."""
    x = np.asarray(x, dtype=np.float64)
    return np.convolve(x, x)[: x.size]


def lagged_dot(v, x) -> np.ndarray:
    """s_j = sum_{i=0}^{n-j} x_i v_{i+j} for j = 0..n."""
    v = np.asarray(v, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    _check_lengths(v, x)
    n = x.size - 1
    return np.convolve(v[::-1], x)[: n + 1][::-1]


def i_divergence(u, v) -> float:
    """I-divergence sum(u log(u/v) - u + v); +inf when u_i > 0 = v_i."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _check_lengths(u, v)
    value = float(np.sum(kl_div(u, v)))
    if math.isinf(value):
        return math.inf
    return value


def objective(x, y) -> float:
    """I(y || x*x) with x*x truncated to the length of y."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_lengths(x, y)
    return i_divergence(y, autoconvolve_truncated(x))


def rho_from_yhat(y, yhat) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    _check_lengths(y, yhat)
    empty = yhat <= 0
    bad = empty & (y > 0)
    if np.any(bad):
        index = int(np.flatnonzero(bad)[0])
        raise DegenerateDenominatorError(index, float(yhat[index]), "rho")
    # 0/0 is taken as 0
    return np.divide(y, yhat, out=np.zeros_like(y), where=~empty)


def rho(x, y) -> np.ndarray:
    """Elementwise ratio y_i / (x*x)_i."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_lengths(x, y)
    return rho_from_yhat(y, autoconvolve_truncated(x))


def gradient_from_rho(x, rho_values) -> np.ndarray:
    """-2 sum_{j=0}^{n-k} (rho_{j+k} - 1) x_j, given rho."""
    return -2.0 * lagged_dot(np.asarray(rho_values, dtype=np.float64) - 1.0, x)


def gradient(x, y) -> np.ndarray:
    """Gradient of the objective; right derivatives at x_k = 0."""
    return gradient_from_rho(x, rho(x, y))

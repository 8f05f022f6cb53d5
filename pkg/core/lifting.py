"""
Lifted-space objects: lower-triangular matrices Y (rows summing to the data)
and W (entries x_j x_{i-j}), the two partial minimizers and checks for the
divergence identities that make the alternating scheme descend.

Matrices are only materialized here, for tests and validation mode. The
iteration itself works on vectors.
"""
import logging
import math

import numpy as np
from scipy.special import kl_div

from core.exceptions import InvalidSignalError, LengthMismatchError
from core.signal import autoconvolve_truncated, objective, rho_from_yhat
from core.solver import solve
from models.lifting import LiftedTriangular, PythagorasCheck

logger = logging.getLogger(__name__)

ROW_SUM_RTOL = 1e-9


def build_w(x) -> LiftedTriangular:
    """W_ij = x_j x_{i-j} for j <= i."""
    x = np.asarray(x, dtype=np.float64)
    i, j = np.tril_indices(x.size)
    W = np.zeros((x.size, x.size))
    W[i, j] = x[j] * x[i - j]
    return LiftedTriangular(entries=W)


def build_y_star(x, y) -> LiftedTriangular:
    """Minimizer of I(Y||W(x)) over matrices with row sums y."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise LengthMismatchError(x.size, y.size)
    ratio = rho_from_yhat(y, autoconvolve_truncated(x))
    return LiftedTriangular(entries=build_w(x).entries * ratio[:, None])


def column_sums(Y: LiftedTriangular) -> np.ndarray:
    """sum_{i>=j} Y_ij for every j."""
    return Y.entries.sum(axis=0)


def tilde_sums(Y: LiftedTriangular) -> np.ndarray:
    """sum_{i>=j} Y_ij + sum_{i>=j} Y_{i,i-j} for every j."""
    M = Y.entries
    diagonals = np.array([np.trace(M, offset=-j) for j in range(Y.side)])
    return column_sums(Y) + diagonals


def matrix_i_divergence(M: LiftedTriangular, N: LiftedTriangular) -> float:
    if M.side != N.side:
        raise LengthMismatchError(M.side, N.side)
    value = float(np.sum(kl_div(M.entries, N.entries)))
    return math.inf if math.isinf(value) else value


def sample_y_matrix(y, rng: np.random.Generator) -> LiftedTriangular:
    """Random matrix with row sums y: uniform lower triangle, rows rescaled."""
    y = np.asarray(y, dtype=np.float64)
    M = np.tril(rng.uniform(0.0, 1.0, size=(y.size, y.size)))
    M *= (y / M.sum(axis=1))[:, None]
    return LiftedTriangular(entries=M)


def _check_rows(Y: LiftedTriangular, y: np.ndarray) -> None:
    if Y.side != y.size:
        raise LengthMismatchError(Y.side, y.size)
    if not np.allclose(Y.row_sums(), y, rtol=ROW_SUM_RTOL, atol=ROW_SUM_RTOL * float(y.max())):
        raise InvalidSignalError("Y rows do not sum to y")


def verify_pythagoras_y(Y: LiftedTriangular, x, y) -> PythagorasCheck:
    """I(Y||W) = I(Y||Y*) + I(Y*||W), and I(Y*||W) equals the objective at x."""
    y = np.asarray(y, dtype=np.float64)
    _check_rows(Y, y)
    W = build_w(x)
    Y_star = build_y_star(x, y)
    left = matrix_i_divergence(Y, W)
    through = matrix_i_divergence(Y, Y_star)
    projection = matrix_i_divergence(Y_star, W)
    return PythagorasCheck(
        left=left,
        through=through,
        projection=projection,
        residual=abs(left - through - projection),
        aux_residual=abs(projection - objective(x, y)),
    )


def verify_pythagoras_w(Y: LiftedTriangular, x_star, W: LiftedTriangular) -> PythagorasCheck:
    """I(Y||W) = I(Y||W*) + I(W*||W) with W* = W(x*), x* solving the system for Ỹ/2.

    Also checks that x* carries the mass of Y. Pass x_star=None to solve for it.
    """
    if x_star is None:
        x_star = solve(tilde_sums(Y) / 2.0).x
    W_star = build_w(x_star)
    left = matrix_i_divergence(Y, W)
    through = matrix_i_divergence(Y, W_star)
    projection = matrix_i_divergence(W_star, W)
    mass = float(np.sum(autoconvolve_truncated(x_star)))
    return PythagorasCheck(
        left=left,
        through=through,
        projection=projection,
        residual=abs(left - through - projection),
        aux_residual=abs(mass - Y.total()),
    )

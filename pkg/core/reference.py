"""
Closed-form minimizers for n = 1 and n = 2, used as test oracles.
"""
import math

import numpy as np

from core.exceptions import InvalidSignalError, LengthMismatchError
from core.signal import as_signal, gradient, objective
from models.reference import SmallCaseSolution


def _expect_length(y: np.ndarray, size: int) -> None:
    if y.size != size:
        raise LengthMismatchError(y.size, size)


def _attained(x, y, boundary: bool, unique, note: str) -> SmallCaseSolution:
    x = np.asarray(x, dtype=np.float64)
    return SmallCaseSolution(
        x=x,
        attained=True,
        unique=unique,
        boundary=boundary,
        gradient_at_min=gradient(x, y),
        divergence=objective(x, y),
        note=note,
    )


def solve_n1(y) -> SmallCaseSolution:
    y = as_signal(y, "y")
    _expect_length(y, 2)
    y0, y1 = float(y[0]), float(y[1])

    if y0 == 0 and y1 == 0:
        # any (0, x_1) is a minimizer
        return _attained([0.0, 0.0], y, boundary=True, unique=False, note="x_0 = 0, x_1 arbitrary")
    if y0 == 0:
        return SmallCaseSolution(
            attained=False,
            unique=False,
            note="infimum 0 approached along 2 x_0 x_1 = y_1 with x_0 -> 0",
        )
    root = math.sqrt(y0)
    if y1 == 0:
        return _attained([root, 0.0], y, boundary=True, unique=True, note="boundary minimizer")
    return _attained([root, y1 / (2.0 * root)], y, boundary=False, unique=True, note="interior minimizer")


def solve_n2(y) -> SmallCaseSolution:
    y = as_signal(y, "y")
    _expect_length(y, 3)
    y0, y1, y2 = (float(v) for v in y)
    if y0 <= 0:
        raise InvalidSignalError("the n = 2 closed form needs y_0 > 0")

    root = math.sqrt(y0)
    if y1 * y1 < 4.0 * y0 * y2:
        x = [root, y1 / (2.0 * root), (y2 - y1 * y1 / (4.0 * y0)) / (2.0 * root)]
        return _attained(x, y, boundary=False, unique=True, note="perfect match")

    norm = math.sqrt(y0 + y1 + y2)
    x = [(y0 + y1 / 2.0) / norm, (y2 + y1 / 2.0) / norm, 0.0]
    return _attained(x, y, boundary=True, unique=None, note="x_2 = 0 with nonnegative partial derivative")


def boundary_gradient_n2(y) -> float:
    """Half of the right derivative in x_2 at the n = 2 boundary minimizer.

    (y_0 + y_1/2)(y_1^2/4 - y_0 y_2) / ((y_2 + y_1/2)^2 sqrt(sum y)); the
    derivative of the objective itself is twice this value.
    """
    y = as_signal(y, "y")
    _expect_length(y, 3)
    y0, y1, y2 = (float(v) for v in y)
    if y1 + y2 == 0.0:
        raise InvalidSignalError("the boundary formula is undefined when y_1 = y_2 = 0", details={"y": y.tolist()})
    return (y0 + y1 / 2.0) * (y1 * y1 / 4.0 - y0 * y2) / ((y2 + y1 / 2.0) ** 2 * math.sqrt(y0 + y1 + y2))

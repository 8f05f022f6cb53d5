"""
Exact solver for the structured system

    x_j * sum_{i=0}^{n-j} x_i = r_j,    j = 0..n,

used by every outer iteration. The closed forms start from the middle value
(x_k = r_k/S for even n, x_{k+1} = r_{k+1}/S for odd n) and expand outwards
through products of prefix/suffix sum differences. `solve_recursive` walks the
same middle-out order one equation at a time and serves as an independent check.
"""
import logging
import math

import numpy as np

from core.exceptions import (
    DegenerateDenominatorError,
    InfeasibleInputError,
    InvalidSignalError,
    InvariantViolation,
)
from models.solver import SolverInput, SolverMethod, SolverSolution

logger = logging.getLogger(__name__)

EPS_S = 1e-12
EPS_DEN = 1e-14
LOG_SPACE_THRESHOLD = 128
AGREEMENT_RTOL = 1e-9
RESIDUAL_RTOL = 1e-9


def forward_map(x) -> np.ndarray:
    """r_j = x_j * sum_{i=0}^{n-j} x_i."""
    x = np.asarray(x, dtype=np.float64)
    return x * np.cumsum(x)[::-1]


def prepare(r) -> SolverInput:
    r = np.array(r, dtype=np.float64)
    if r.ndim != 1 or r.size == 0:
        raise InvalidSignalError("r must be a non-empty vector")
    if not np.all(np.isfinite(r)) or np.any(r < 0):
        raise InvalidSignalError("r must have finite nonnegative entries")

    n = r.size - 1
    k = n // 2
    total = float(r.sum())
    B = np.cumsum(r)
    E = np.zeros(n + 2)
    E[: n + 1] = np.cumsum(r[::-1])[::-1]

    s2 = float(B[k] - E[k + 1])
    direct = float(r[: k + 1].sum() - r[k + 1 :].sum())
    if abs(s2 - direct) > 64 * np.finfo(float).eps * total * (n + 1):
        raise InvariantViolation(
            "S2 disagrees with B_k - E_{k+1}",
            details={"B_k-E_k+1": s2, "direct": direct},
        )
    if s2 < -EPS_S * total:
        raise InfeasibleInputError(
            f"S2 = {s2!r} is negative, the system has no solution",
            details={"S2": s2},
        )
    s2 = max(s2, 0.0)
    return SolverInput(r=r, B=B, E=E, S2=s2, S=math.sqrt(s2), k=k, total=total)


def _require_feasible(inp: SolverInput) -> None:
    if inp.S2 <= EPS_S * inp.total:
        raise InfeasibleInputError(
            f"S = {inp.S!r} vanishes while sum(r) = {inp.total!r}",
            details={"S2": inp.S2, "total": inp.total},
        )


def _require_positive(values: np.ndarray, indices: np.ndarray, eps: float, where: str) -> None:
    bad = values <= eps
    if np.any(bad):
        first = int(np.flatnonzero(bad)[0])
        raise DegenerateDenominatorError(int(indices[first]), float(values[first]), where)


def _cumulative_product(factors: np.ndarray, log_space: bool) -> np.ndarray:
    """[1, f_1, f_1 f_2, ...]; long products are accumulated as sums of logs."""
    out = np.ones(factors.size + 1)
    if factors.size == 0:
        return out
    if log_space:
        out[1:] = np.exp(np.cumsum(np.log(factors)))
    else:
        out[1:] = np.cumprod(factors)
    return out


def _solution(x: np.ndarray, inp: SolverInput, method: SolverMethod) -> SolverSolution:
    residuals = np.abs(forward_map(x) - inp.r)
    return SolverSolution(
        x=x,
        residuals=residuals,
        max_residual=float(residuals.max()),
        method=method,
        half_sum=float(x[: inp.k + 1].sum()),
    )


def solve_even(inp: SolverInput) -> SolverSolution:
    n, k = inp.n, inp.k
    if n % 2:
        raise InvalidSignalError(f"solve_even needs an even n, got {n}")
    _require_feasible(inp)
    r, B, E, S = inp.r, inp.B, inp.E, inp.S
    eps = EPS_DEN * inp.total
    log_space = n > LOG_SPACE_THRESHOLD

    x = np.empty(n + 1)
    x[k] = r[k] / S
    if k > 0:
        i = np.arange(k + 1, n + 1)
        up_num = B[n - i + 1] - E[i]
        up_den = B[n - i] - E[i]
        _require_positive(up_den, i, eps, "B[n-i] - E[i]")
        _require_positive(up_num, i, eps, "B[n-i+1] - E[i]")
        x[k + 1 :] = r[k + 1 :] / S * _cumulative_product(up_num / up_den, log_space)[1:]

        i = np.arange(1, k + 1)
        low_num = B[k - i] - E[k + i]  # same values as up_den, already checked
        low_den = B[k - i] - E[k + 1 + i]
        _require_positive(low_den, i, eps, "B[k-i] - E[k+1+i]")
        x[: k + 1] = r[: k + 1] / S * _cumulative_product(low_num / low_den, log_space)[::-1]

    return _solution(x, inp, SolverMethod.EVEN)


def solve_odd(inp: SolverInput) -> SolverSolution:
    n, k = inp.n, inp.k
    if n % 2 == 0:
        raise InvalidSignalError(f"solve_odd needs an odd n, got {n}")
    _require_feasible(inp)
    r, B, E, S = inp.r, inp.B, inp.E, inp.S
    eps = EPS_DEN * inp.total
    log_space = n > LOG_SPACE_THRESHOLD

    # E has the trailing E_{n+1} = 0 entry, reached by E[k+l+2] at l = k
    corner = B[k] - E[k + 2]
    _require_positive(np.array([corner]), np.array([k]), eps, "B[k] - E[k+2]")

    l = np.arange(1, k + 1)
    inner = B[k - l] - E[k + l + 1]
    _require_positive(inner, l, eps, "B[k-l] - E[k+l+1]")
    up_num = B[k - l + 1] - E[k + l + 1]
    _require_positive(up_num, l, eps, "B[k-l+1] - E[k+l+1]")
    low_den = B[k - l] - E[k + l + 2]
    _require_positive(low_den, l, eps, "B[k-l] - E[k+l+2]")

    x = np.empty(n + 1)
    x[k + 1 :] = r[k + 1 :] / S * _cumulative_product(up_num / inner, log_space)
    x[: k + 1] = r[: k + 1] * S / corner * _cumulative_product(inner / low_den, log_space)[::-1]
    return _solution(x, inp, SolverMethod.ODD)


def _divide(rj: float, den: float, index: int, eps: float) -> float:
    if rj == 0.0:
        return 0.0
    if den <= eps:
        raise DegenerateDenominatorError(index, float(den), "recursion")
    return rj / den


def solve_recursive(inp: SolverInput) -> SolverSolution:
    """Middle-out recursion, one equation per unknown."""
    _require_feasible(inp)
    n, k, r, S = inp.n, inp.k, inp.r, inp.S
    eps = EPS_DEN * S
    x = np.zeros(n + 1)

    if n % 2 == 0:
        x[k] = r[k] / S
        low_sum, high_sum = x[k], 0.0
        for l in range(1, k + 1):
            x[k + l] = _divide(r[k + l], S - low_sum, k + l, eps)
            high_sum += x[k + l]
            x[k - l] = _divide(r[k - l], S + high_sum, k - l, eps)
            low_sum += x[k - l]
        return _solution(x, inp, SolverMethod.RECURSIVE)

    x[k + 1] = r[k + 1] / S
    low_sum, high_sum = 0.0, x[k + 1]
    for l in range(0, k + 1):
        x[k - l] = _divide(r[k - l], S + high_sum, k - l, eps)
        low_sum += x[k - l]
        if k + 2 + l <= n:
            x[k + 2 + l] = _divide(r[k + 2 + l], S - low_sum, k + 2 + l, eps)
            high_sum += x[k + 2 + l]
    return _solution(x, inp, SolverMethod.RECURSIVE)


def solve(r, validate: bool = False) -> SolverSolution:
    """Solve the system for r, dispatching on the parity of n.

    With `validate`, the recursive solver is run as well and both the agreement
    and the residuals are enforced.
    """
    inp = prepare(r)
    if inp.total == 0.0:
        method = SolverMethod.EVEN if inp.n % 2 == 0 else SolverMethod.ODD
        return _solution(np.zeros(inp.n + 1), inp, method)

    solution = solve_even(inp) if inp.n % 2 == 0 else solve_odd(inp)
    if not validate:
        return solution

    check = solve_recursive(inp)
    scale = float(np.max(np.abs(solution.x)))
    if not np.allclose(solution.x, check.x, rtol=AGREEMENT_RTOL, atol=AGREEMENT_RTOL * scale):
        worst = int(np.argmax(np.abs(solution.x - check.x)))
        raise InvariantViolation(
            f"closed form and recursion disagree at index {worst}",
            details={"closed_form": float(solution.x[worst]), "recursive": float(check.x[worst])},
        )
    if solution.max_residual > RESIDUAL_RTOL * float(inp.r.max()):
        raise InvariantViolation(
            f"solver residual {solution.max_residual!r} exceeds tolerance",
            details={"max_residual": solution.max_residual},
        )
    logger.debug(f"solver n={inp.n} max_residual={solution.max_residual:.3e}")
    return solution

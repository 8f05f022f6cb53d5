"""
The alternating-minimization iteration x^t -> x^{t+1}.

Each step forms r_j = x_j sum_i x_i rho_{i+j} from the current iterate and
solves the structured system for the next one. The loop records per-step
diagnostics, enforces the descent and conservation properties in validation
mode and certifies the final iterate with a KKT report.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

import numpy as np

from core.exceptions import DeautoconvError, InvariantViolation, LengthMismatchError, NonFiniteDivergenceError
from core.lifting import build_w, build_y_star, matrix_i_divergence
from core.signal import (
    as_signal,
    autoconvolve_truncated,
    gradient,
    gradient_from_rho,
    i_divergence,
    lagged_dot,
    rho_from_yhat,
)
from core.solver import forward_map, solve
from models.algorithm import (
    InitKind,
    IterationRecord,
    IterationState,
    IterationTrace,
    KktReport,
    RunConfig,
    RunOutcome,
)
from utils.progress import ProgressThrottle

logger = logging.getLogger(__name__)

IMPLICIT_RTOL = 1e-9


def compute_r(x, rho) -> np.ndarray:
    """r_j = x_j sum_{i=0}^{n-j} x_i rho_{i+j}."""
    x = np.asarray(x, dtype=np.float64)
    return x * lagged_dot(rho, x)


def make_state(t: int, x, y) -> IterationState:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise LengthMismatchError(x.size, y.size)
    yhat = autoconvolve_truncated(x)
    divergence = i_divergence(y, yhat)
    if not math.isfinite(divergence):
        raise NonFiniteDivergenceError(
            "divergence is infinite: x*x vanishes where y is positive",
            details={"indices": np.flatnonzero((yhat <= 0) & (y > 0)).tolist()},
        ).at_iteration(t)
    return IterationState(t=t, x=x, yhat=yhat, rho=rho_from_yhat(y, yhat), divergence=divergence)


def initial_state(y, x0) -> IterationState:
    y = as_signal(y, "y")
    x0 = as_signal(x0, "x0")
    return make_state(0, x0, y)


def initial_point(y, config: RunConfig, seed: Optional[int] = None) -> np.ndarray:
    """Starting vector, scaled by sqrt(sum(y)) / (n+1) for random and constant inits."""
    y = np.asarray(y, dtype=np.float64)
    total = float(y.sum())
    scale = math.sqrt(total) / y.size if total > 0 else 1.0

    if config.init == InitKind.GIVEN:
        if config.init_values.size != y.size:
            raise LengthMismatchError(config.init_values.size, y.size)
        return np.array(config.init_values)
    if config.init == InitKind.CONSTANT:
        return np.full(y.size, scale)
    rng = np.random.default_rng(config.seed if seed is None else seed)
    return rng.uniform(config.init_low, config.init_high, size=y.size) * scale


def _w_gain(r: np.ndarray, x: np.ndarray, x_next: np.ndarray, mass: float, mass_next: float) -> float:
    # I(W^{t+1} || W^t) without forming the matrices
    active = r > 0
    log_ratio = np.log(x_next[active] / x[active])
    return float(2.0 * np.sum(r[active] * log_ratio) + mass - mass_next)


def _check(condition: bool, message: str, t: int, config: RunConfig, **details) -> None:
    if condition:
        return
    if config.validation_mode:
        raise InvariantViolation(message, details=details).at_iteration(t)
    logger.warning(f"iteration {t}: {message}")


def _advance(state: IterationState, y: np.ndarray, config: RunConfig) -> Tuple[IterationState, IterationRecord]:
    t = state.t + 1
    r = compute_r(state.x, state.rho)
    try:
        solution = solve(r, validate=config.validation_mode)
        new = make_state(t, solution.x, y)
    except DeautoconvError as exc:
        if exc.iteration is None:
            exc.at_iteration(t)
        raise

    scale = max(float(y.sum()), np.finfo(float).tiny)
    mass = float(state.yhat.sum())
    mass_next = float(new.yhat.sum())
    grad = gradient_from_rho(new.x, new.rho)
    gain = state.divergence - new.divergence
    w_gain = _w_gain(r, state.x, new.x, mass, mass_next)
    orthogonality = float(np.dot(new.x, grad))

    _check(gain >= -config.tol_gain * scale, f"divergence increased by {-gain:.3e}", t, config, gain=gain)
    _check(
        abs(mass_next - scale) <= config.tol_mass * scale,
        f"mass {mass_next!r} drifted from sum(y) = {scale!r}",
        t,
        config,
        mass=mass_next,
    )
    _check(
        abs(orthogonality) <= config.tol_id * scale,
        f"sum_j x_j grad_j = {orthogonality:.3e} is not zero",
        t,
        config,
        orthogonality=orthogonality,
    )

    zero_count = int(np.count_nonzero(new.x == 0))
    if zero_count > int(np.count_nonzero(state.x == 0)):
        logger.warning(f"iteration {t}: {zero_count} coordinates are exactly zero")

    implicit_residual = y_gain = w_gain_lifted = None
    if config.validation_mode:
        # x'_j sum_i x'_i = x_j (-grad_j / 2 + sum_i x_i)
        target = state.x * (-0.5 * gradient_from_rho(state.x, state.rho) + np.cumsum(state.x)[::-1])
        implicit_residual = float(np.max(np.abs(forward_map(new.x) - target)))
        _check(
            implicit_residual <= IMPLICIT_RTOL * scale,
            f"implicit update residual {implicit_residual:.3e}",
            t,
            config,
        )
        y_gain = matrix_i_divergence(build_y_star(state.x, y), build_y_star(new.x, y))
        w_gain_lifted = matrix_i_divergence(build_w(new.x), build_w(state.x))
        _check(
            abs(gain - y_gain - w_gain_lifted) <= config.tol_id * scale,
            f"gain {gain!r} does not split into {y_gain!r} + {w_gain_lifted!r}",
            t,
            config,
        )
        _check(
            abs(w_gain_lifted - w_gain) <= config.tol_id * scale,
            f"lifted W gain {w_gain_lifted!r} differs from {w_gain!r}",
            t,
            config,
        )

    record = IterationRecord(
        t=t,
        divergence=new.divergence,
        gain=gain,
        w_gain=w_gain,
        kkt_residual=float(np.max(np.abs(new.x * grad))),
        mass=mass_next,
        orthogonality=orthogonality,
        min_x=float(new.x.min()),
        zero_count=zero_count,
        solver_residual=solution.max_residual,
        implicit_residual=implicit_residual,
        y_gain=y_gain,
        w_gain_lifted=w_gain_lifted,
    )
    logger.debug(f"iteration {t}: divergence={new.divergence:.6e} gain={gain:.3e}")
    return new, record


def step(state: IterationState, y, config: Optional[RunConfig] = None) -> IterationState:
    """One outer iteration from `state`."""
    y = np.asarray(y, dtype=np.float64)
    new, _ = _advance(state, y, config or RunConfig())
    return new


def fixed_point_distance(x, y) -> float:
    """||step(x) - x||_inf / max(1, ||x||_inf)."""
    state = make_state(0, x, y)
    new = step(state, y)
    return float(np.max(np.abs(new.x - state.x)) / max(1.0, float(np.max(np.abs(state.x)))))


def kkt_report(x, y, tol_kkt: float = 1e-8, theta_zero: float = 1e-10) -> KktReport:
    """Complementarity and boundary-sign check at x.

    Coordinates with x_j <= theta_zero * max(x) count as boundary; there the
    gradient must be >= -tol_kkt * max(1, ||grad||_inf). Complementarity is
    measured against tol_kkt * max(1, sum(y)).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    grad = gradient(x, y)
    complementarity = x * grad
    max_complementarity = float(np.max(np.abs(complementarity)))

    zero_level = theta_zero * float(np.max(x))
    boundary = np.flatnonzero(x <= zero_level)
    floor = -tol_kkt * max(1.0, float(np.max(np.abs(grad))))
    violations = boundary[grad[boundary] < floor]
    satisfied = max_complementarity <= tol_kkt * max(1.0, float(y.sum())) and violations.size == 0

    return KktReport(
        x=x,
        gradient=grad,
        complementarity=complementarity,
        max_complementarity=max_complementarity,
        boundary=boundary.tolist(),
        min_boundary_gradient=float(grad[boundary].min()) if boundary.size else None,
        violations=violations.tolist(),
        tol_kkt=tol_kkt,
        zero_level=zero_level,
        satisfied=bool(satisfied),
    )


def _should_stop(trace: IterationTrace, config: RunConfig) -> bool:
    if config.stop_tolerance is None:
        return False
    t = trace.iterations
    if t < config.stop_window:
        return False
    earlier = trace.divergence_at(t - config.stop_window)
    return earlier - trace.final_divergence <= config.stop_tolerance * abs(earlier)


def run_single(y, config: RunConfig, restart: int = 0) -> RunOutcome:
    """One seeded run; the seed is config.seed + restart."""
    y = as_signal(y, "y")
    seed = config.seed + restart
    x0 = initial_point(y, config, seed)
    state = initial_state(y, x0)
    trace = IterationTrace(
        initial_divergence=state.divergence,
        initial_kkt_residual=float(np.max(np.abs(state.x * gradient_from_rho(state.x, state.rho)))),
        initial_mass=float(state.yhat.sum()),
    )
    throttle = ProgressThrottle(config.progress_every, label=f"restart {restart}")

    stopped_early = False
    for _ in range(config.max_iterations):
        state, record = _advance(state, y, config)
        trace.append(record)
        throttle.report(state.t, state.divergence, extra=f"gain={record.gain:.3e}")
        if _should_stop(trace, config):
            stopped_early = True
            break

    degenerate = bool(y[0] == 0)
    growth_ratio = float(np.max(state.x) / np.max(x0))
    if degenerate:
        logger.warning(
            f"restart {restart}: y_0 = 0, the minimum may be unattained; max(x) grew by {growth_ratio:.3e}"
        )
    kkt = kkt_report(state.x, y, config.tol_kkt, config.theta_zero)
    try:
        distance = fixed_point_distance(state.x, y)
    except DeautoconvError as exc:
        logger.warning(f"restart {restart}: no fixed-point distance, the next step fails: {exc}")
        distance = None
    logger.info(
        f"restart {restart}: {trace.iterations} iterations, divergence "
        f"{trace.initial_divergence:.6e} -> {trace.final_divergence:.6e}, {kkt.verdict}"
    )
    return RunOutcome(
        restart=restart,
        seed=seed,
        x_init=x0,
        x=state.x,
        trace=trace,
        kkt=kkt,
        iterations=trace.iterations,
        stopped_early=stopped_early,
        degenerate_input=degenerate,
        growth_ratio=growth_ratio,
        fixed_point_distance=distance,
    )


def run_all(y, config: RunConfig) -> List[RunOutcome]:
    """All restarts, ordered by restart index."""
    y = as_signal(y, "y")
    if y[0] == 0:
        logger.warning("y_0 = 0: a minimizer need not exist or be unique")
    restarts = range(config.restarts)
    if config.workers > 1 and config.restarts > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            return list(executor.map(lambda i: run_single(y, config, i), restarts))
    return [run_single(y, config, i) for i in restarts]


def run(y, config: Optional[RunConfig] = None) -> RunOutcome:
    """Fit y and return the restart with the smallest final divergence."""
    outcomes = run_all(y, config or RunConfig())
    return min(outcomes, key=lambda outcome: outcome.final_divergence)

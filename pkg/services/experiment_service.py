# services/experiment_service.py
"""
Seeded data generators and the two experiment protocols: an exact case where
y is the autoconvolution of a random generator, and a random-data case with
y_k = (k+1) u_k.

Random streams come from numpy's PCG64 via `default_rng`. The data use
`spec.seed`; restart i starts from seed `spec.seed + 1 + i`.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Tuple

import numpy as np

from core.algorithm import run_single
from core.exceptions import DeautoconvError
from core.signal import autoconvolve
from models.algorithm import RunConfig
from models.experiment import ExperimentKind, ExperimentResult, ExperimentRun, ExperimentSpec

logger = logging.getLogger(__name__)

EXACT_LOW, EXACT_HIGH = 1.0, 10.0


def generate_exact(m: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Generator x of length m+1 with uniform [1, 10] entries and y = x*x (length 2m+1)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(seed)
    true_x = rng.uniform(EXACT_LOW, EXACT_HIGH, size=m + 1)
    return true_x, autoconvolve(true_x)


def generate_random(m: int, K: int, seed: int) -> np.ndarray:
    """y_k = (k+1) u_k, u_k uniform on [1, 2K^2], k = 0..2m."""
    if m < 1 or K < 1:
        raise ValueError("m and K must be >= 1")
    rng = np.random.default_rng(seed)
    u = rng.uniform(1.0, 2.0 * K * K, size=2 * m + 1)
    return np.arange(1, 2 * m + 2) * u


def recovery_error(x: np.ndarray, true_x: np.ndarray) -> float:
    """||x - true_x||_inf / ||true_x||_inf with true_x zero-padded to len(x)."""
    padded = np.zeros(x.size)
    padded[: true_x.size] = true_x
    return float(np.max(np.abs(x - padded)) / np.max(np.abs(true_x)))


class ExperimentService:
    def __init__(self, base_config: Optional[RunConfig] = None):
        self.base_config = base_config or RunConfig()

    def data_for(self, spec: ExperimentSpec) -> Tuple[Optional[np.ndarray], np.ndarray]:
        if spec.kind == ExperimentKind.EXACT:
            return generate_exact(spec.m, spec.seed)
        return None, generate_random(spec.m, spec.K, spec.seed)

    def config_for(self, spec: ExperimentSpec) -> RunConfig:
        # run_single adds the restart index to this seed
        return self.base_config.model_copy(
            update={
                "max_iterations": spec.T,
                "seed": spec.seed + 1,
                "restarts": spec.restarts,
                "validation_mode": spec.validation_mode or self.base_config.validation_mode,
            }
        )

    def _run_restart(
        self, y: np.ndarray, true_x: Optional[np.ndarray], config: RunConfig, restart: int
    ) -> ExperimentRun:
        try:
            outcome = run_single(y, config, restart)
        except DeautoconvError as exc:
            logger.warning(f"restart {restart} failed: {exc}")
            return ExperimentRun(
                restart=restart,
                init_seed=config.seed + restart,
                error=str(exc),
                error_code=exc.error_code,
            )
        return ExperimentRun(
            restart=restart,
            init_seed=outcome.seed,
            outcome=outcome,
            recovery_error=recovery_error(outcome.x, true_x) if true_x is not None else None,
        )

    def run_experiment(self, spec: ExperimentSpec) -> ExperimentResult:
        true_x, y = self.data_for(spec)
        config = self.config_for(spec)
        logger.info(
            f"experiment kind={spec.kind.value} m={spec.m} n={spec.n} T={spec.T} "
            f"restarts={spec.restarts} seed={spec.seed}"
        )

        restarts = range(spec.restarts)
        if spec.workers > 1 and spec.restarts > 1:
            with ThreadPoolExecutor(max_workers=spec.workers) as executor:
                runs = list(executor.map(lambda i: self._run_restart(y, true_x, config, i), restarts))
        else:
            runs = [self._run_restart(y, true_x, config, i) for i in restarts]

        completed = [run for run in runs if run.completed]
        best_restart = reduction = None
        if completed:
            best = min(completed, key=lambda run: run.outcome.final_divergence)
            best_restart = best.restart
            trace = best.outcome.trace
            final = trace.final_divergence
            reduction = trace.initial_divergence / final if final > 0 else math.inf
            logger.info(
                f"experiment done: {len(completed)}/{len(runs)} restarts completed, "
                f"best restart {best_restart} with divergence {final:.6e}"
            )
        else:
            logger.warning("experiment done: no restart completed")

        return ExperimentResult(
            spec=spec,
            y=y,
            true_x=true_x,
            runs=runs,
            best_restart=best_restart,
            divergence_reduction=reduction,
        )


def get_experiment_service(base_config: Optional[RunConfig] = None) -> ExperimentService:
    return ExperimentService(base_config)

from enum import Enum
from typing import List, Optional

from pydantic import Field, model_validator

from .algorithm import RunOutcome
from .base import FrozenModel
from .ndarray import FloatArray


class ExperimentKind(str, Enum):
    EXACT = "exact"  # y = x*x of a random generator x
    RANDOM = "random"  # y_k = (k+1) u_k


class ExperimentSpec(FrozenModel):
    kind: ExperimentKind
    m: int = Field(..., ge=1)
    K: int = Field(5, ge=1)
    T: int = Field(2000, ge=1)
    seed: int = Field(0, ge=0)
    restarts: int = Field(3, ge=1)
    workers: int = Field(1, ge=1)
    validation_mode: bool = False

    @property
    def n(self) -> int:
        return 2 * self.m


class ExperimentRun(FrozenModel):
    """One restart; exactly one of `outcome` and `error` is set."""

    restart: int
    init_seed: int
    outcome: Optional[RunOutcome] = None
    error: Optional[str] = None
    error_code: Optional[str] = None
    recovery_error: Optional[float] = None

    @model_validator(mode="after")
    def check_exclusive(self) -> "ExperimentRun":
        if (self.outcome is None) == (self.error is None):
            raise ValueError("a run carries either an outcome or an error")
        return self

    @property
    def completed(self) -> bool:
        return self.outcome is not None


class ExperimentResult(FrozenModel):
    spec: ExperimentSpec
    y: FloatArray
    true_x: Optional[FloatArray] = None
    runs: List[ExperimentRun]
    best_restart: Optional[int] = None
    divergence_reduction: Optional[float] = None  # I^0 / I^T of the best restart

    @model_validator(mode="after")
    def check_recovery(self) -> "ExperimentResult":
        exact = self.spec.kind == ExperimentKind.EXACT
        if exact != (self.true_x is not None):
            raise ValueError("true_x is present exactly for the exact kind")
        for run in self.runs:
            if run.recovery_error is not None and not exact:
                raise ValueError("recovery errors only exist for the exact kind")
        return self

    @property
    def recovery_errors(self) -> List[Optional[float]]:
        return [run.recovery_error for run in self.runs]

    @property
    def fixed_point_distances(self) -> List[Optional[float]]:
        """Distance of each completed run's final iterate from its next step."""
        return [run.outcome.fixed_point_distance for run in self.completed_runs]

    @property
    def completed_runs(self) -> List[ExperimentRun]:
        return [run for run in self.runs if run.completed]


class RunSummary(FrozenModel):
    restart: int
    init_seed: int
    completed: bool
    error: Optional[str] = None
    error_code: Optional[str] = None
    iterations: Optional[int] = None
    initial_divergence: Optional[float] = None
    final_divergence: Optional[float] = None
    kkt_satisfied: Optional[bool] = None
    max_complementarity: Optional[float] = None
    recovery_error: Optional[float] = None
    fixed_point_distance: Optional[float] = None
    basin_switches: List[int] = Field(default_factory=list)
    x: Optional[List[float]] = None

    @classmethod
    def from_run(cls, run: ExperimentRun) -> "RunSummary":
        if run.outcome is None:
            return cls(
                restart=run.restart,
                init_seed=run.init_seed,
                completed=False,
                error=run.error,
                error_code=run.error_code,
            )
        outcome = run.outcome
        return cls(
            restart=run.restart,
            init_seed=run.init_seed,
            completed=True,
            iterations=outcome.iterations,
            initial_divergence=outcome.trace.initial_divergence,
            final_divergence=outcome.final_divergence,
            kkt_satisfied=outcome.kkt.satisfied,
            max_complementarity=outcome.kkt.max_complementarity,
            recovery_error=run.recovery_error,
            fixed_point_distance=outcome.fixed_point_distance,
            basin_switches=outcome.trace.basin_switches(),
            x=outcome.x.tolist(),
        )


class ExperimentSummary(FrozenModel):
    """What summary.json holds: everything but the per-step traces."""

    spec: ExperimentSpec
    y: List[float]
    true_x: Optional[List[float]] = None
    best_restart: Optional[int] = None
    divergence_reduction: Optional[float] = None
    runs: List[RunSummary]

    @classmethod
    def from_result(cls, result: ExperimentResult) -> "ExperimentSummary":
        return cls(
            spec=result.spec,
            y=result.y.tolist(),
            true_x=result.true_x.tolist() if result.true_x is not None else None,
            best_restart=result.best_restart,
            divergence_reduction=result.divergence_reduction,
            runs=[RunSummary.from_run(run) for run in result.runs],
        )

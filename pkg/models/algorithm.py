from enum import Enum
from typing import Annotated, Any, Dict, List, Optional

import numpy as np
from pydantic import Field, field_validator, model_validator

from .base import FrozenModel, MutableModel
from .ndarray import FloatArray

TRACE_COLUMNS = ("t", "divergence", "gain", "w_gain", "kkt_residual", "mass")


class InitKind(str, Enum):
    RANDOM = "random"
    CONSTANT = "constant"
    GIVEN = "given"


class RunConfig(FrozenModel):
    """Parameters of one fit: iteration limits, initialisation and tolerances.

    Tolerances for monotonicity, mass and the gain identities are relative to
    sum(y); `theta_zero` is relative to max(x).
    """

    max_iterations: int = Field(2000, ge=1)
    stop_tolerance: Optional[Annotated[float, Field(gt=0)]] = 1e-12
    stop_window: int = Field(10, ge=1)

    init: InitKind = InitKind.RANDOM
    init_values: Optional[FloatArray] = None
    init_low: float = Field(0.5, gt=0)
    init_high: float = Field(1.5, gt=0)
    seed: int = Field(0, ge=0)
    restarts: int = Field(1, ge=1)
    workers: int = Field(1, ge=1)

    validation_mode: bool = False
    tol_mass: float = Field(1e-10, gt=0)
    tol_id: float = Field(1e-8, gt=0)
    tol_gain: float = Field(1e-12, gt=0)
    tol_kkt: float = Field(1e-8, gt=0)
    theta_zero: float = Field(1e-10, gt=0)

    progress_every: int = Field(0, ge=0)

    @field_validator("init_values")
    @classmethod
    def check_init_values(cls, value: Optional[np.ndarray]) -> Optional[np.ndarray]:
        if value is None:
            return value
        if value.ndim != 1 or value.size == 0:
            raise ValueError("init_values must be a non-empty vector")
        if not np.all(np.isfinite(value)) or np.any(value <= 0):
            raise ValueError("init_values must be finite and strictly positive")
        return value

    @model_validator(mode="after")
    def check_init(self) -> "RunConfig":
        if self.init_low >= self.init_high:
            raise ValueError("init_low must be smaller than init_high")
        if self.init == InitKind.GIVEN and self.init_values is None:
            raise ValueError("init=given requires init_values")
        return self

    @classmethod
    def from_settings(cls, settings=None, **overrides: Any) -> "RunConfig":
        """Defaults from the environment, then explicit overrides."""
        if settings is None:
            from config.settings import get_settings

            settings = get_settings()
        values: Dict[str, Any] = {
            "max_iterations": settings.MAX_ITERATIONS,
            "stop_tolerance": settings.STOP_TOLERANCE,
            "stop_window": settings.STOP_WINDOW,
            "init_low": settings.INIT_LOW,
            "init_high": settings.INIT_HIGH,
            "workers": settings.WORKERS,
            "tol_mass": settings.TOL_MASS,
            "tol_id": settings.TOL_ID,
            "tol_gain": settings.TOL_GAIN,
            "tol_kkt": settings.TOL_KKT,
            "theta_zero": settings.THETA_ZERO,
            "progress_every": settings.PROGRESS_EVERY,
        }
        values.update(overrides)
        return cls(**values)


class IterationState(FrozenModel):
    t: int = Field(..., ge=0)
    x: FloatArray
    yhat: FloatArray
    rho: FloatArray
    divergence: float


class IterationRecord(FrozenModel):
    """Diagnostics of the step that produced iterate t."""

    t: int = Field(..., ge=1)
    divergence: float
    gain: float
    w_gain: float  # 2 sum_j r_j log(x'_j / x_j) + mass(x) - mass(x')
    kkt_residual: float
    mass: float
    orthogonality: float
    min_x: float
    zero_count: int
    solver_residual: float
    implicit_residual: Optional[float] = None
    y_gain: Optional[float] = None
    w_gain_lifted: Optional[float] = None


class IterationTrace(MutableModel):
    """Per-run history: the t = 0 values plus one record per executed step."""

    initial_divergence: float
    initial_kkt_residual: float
    initial_mass: float
    records: List[IterationRecord] = Field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def final_divergence(self) -> float:
        return self.records[-1].divergence if self.records else self.initial_divergence

    def append(self, record: IterationRecord) -> None:
        self.records.append(record)

    def divergences(self) -> np.ndarray:
        return np.array([self.initial_divergence] + [r.divergence for r in self.records])

    def divergence_at(self, t: int) -> float:
        return self.initial_divergence if t == 0 else self.records[t - 1].divergence

    def rows(self) -> List[Dict[str, Optional[float]]]:
        """Rows for the trace CSV; the t = 0 row has no gain columns."""
        rows: List[Dict[str, Optional[float]]] = [
            {
                "t": 0,
                "divergence": self.initial_divergence,
                "gain": None,
                "w_gain": None,
                "kkt_residual": self.initial_kkt_residual,
                "mass": self.initial_mass,
            }
        ]
        rows.extend({column: getattr(r, column) for column in TRACE_COLUMNS} for r in self.records)
        return rows

    def basin_switches(self, window: int = 50, factor: float = 10.0, min_drop: float = 1e-6) -> List[int]:
        """Steps whose gain jumps after a plateau.

        A step t qualifies when its gain exceeds `factor` times the mean gain of
        the `window` steps before it and removes at least `min_drop` of the
        divergence it started from.
        """
        gains = np.array([r.gain for r in self.records])
        switches: List[int] = []
        for index in range(window, gains.size):
            before = self.divergence_at(index)
            if before <= 0:
                continue
            plateau = max(float(np.mean(gains[index - window : index])), 0.0)
            if gains[index] > factor * plateau and gains[index] >= min_drop * before:
                switches.append(index + 1)
        return switches


class KktReport(FrozenModel):
    x: FloatArray
    gradient: FloatArray
    complementarity: FloatArray
    max_complementarity: float
    boundary: List[int]
    min_boundary_gradient: Optional[float] = None
    violations: List[int]
    tol_kkt: float
    zero_level: float
    satisfied: bool

    @property
    def verdict(self) -> str:
        return "KKT-satisfied within tol" if self.satisfied else "KKT-violated"


class RunOutcome(FrozenModel):
    restart: int = Field(..., ge=0)
    seed: int
    x_init: FloatArray
    x: FloatArray
    trace: IterationTrace
    kkt: KktReport
    iterations: int
    stopped_early: bool
    degenerate_input: bool = False
    growth_ratio: float = 1.0  # max(x^T) / max(x^0)
    fixed_point_distance: Optional[float] = None  # None when one more step fails

    @property
    def final_divergence(self) -> float:
        return self.trace.final_divergence

from typing import List, Optional

from .algorithm import RunConfig
from .base import FrozenModel


class RestartSummary(FrozenModel):
    restart: int
    seed: int
    iterations: int
    initial_divergence: float
    final_divergence: float
    kkt_satisfied: bool
    fixed_point_distance: Optional[float] = None


class FitReport(FrozenModel):
    """Summary written to report.json by `fit`."""

    input_path: Optional[str] = None
    n: int
    best_restart: int
    seed: int
    iterations: int
    stopped_early: bool
    initial_divergence: float
    final_divergence: float
    kkt_verdict: str
    kkt_satisfied: bool
    max_complementarity: float
    min_boundary_gradient: Optional[float] = None
    boundary: List[int]
    degenerate_input: bool
    growth_ratio: float
    fixed_point_distance: Optional[float] = None
    basin_switches: List[int]
    x: List[float]
    restarts: List[RestartSummary]
    config: RunConfig

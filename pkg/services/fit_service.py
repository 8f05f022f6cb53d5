# services/fit_service.py
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from config.settings import Settings, get_settings
from core.algorithm import run_all
from core.exceptions import InvalidSignalError
from core.signal import as_signal
from models.algorithm import RunConfig, RunOutcome
from models.fit import FitReport, RestartSummary
from utils.io import read_signal_file, write_json, write_trace_csv, write_vector_csv
from utils.response import success_response

logger = logging.getLogger(__name__)


class FitService:
    """Load data, fit it and write the output bundle (x.csv, trace.csv, report.json)."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    def load(self, path) -> np.ndarray:
        return as_signal(read_signal_file(path), "y")

    def build_config(self, **overrides) -> RunConfig:
        return RunConfig.from_settings(self.settings, **overrides)

    def fit(
        self, y, config: RunConfig, allow_degenerate: bool = False, input_path: Optional[str] = None
    ) -> Tuple[RunOutcome, FitReport]:
        y = as_signal(y, "y")
        if y[0] == 0 and not allow_degenerate:
            raise InvalidSignalError(
                "y_0 = 0: a minimizer need not exist; pass --allow-degenerate to fit anyway",
                details={"y_0": 0.0},
            )
        outcomes = run_all(y, config)
        best = min(outcomes, key=lambda outcome: outcome.final_divergence)
        return best, self.report(best, outcomes, config, input_path)

    def report(
        self, best: RunOutcome, outcomes: List[RunOutcome], config: RunConfig, input_path: Optional[str] = None
    ) -> FitReport:
        return FitReport(
            input_path=input_path,
            n=best.x.size - 1,
            best_restart=best.restart,
            seed=best.seed,
            iterations=best.iterations,
            stopped_early=best.stopped_early,
            initial_divergence=best.trace.initial_divergence,
            final_divergence=best.final_divergence,
            kkt_verdict=best.kkt.verdict,
            kkt_satisfied=best.kkt.satisfied,
            max_complementarity=best.kkt.max_complementarity,
            min_boundary_gradient=best.kkt.min_boundary_gradient,
            boundary=best.kkt.boundary,
            degenerate_input=best.degenerate_input,
            growth_ratio=best.growth_ratio,
            fixed_point_distance=best.fixed_point_distance,
            basin_switches=best.trace.basin_switches(),
            x=best.x.tolist(),
            restarts=[
                RestartSummary(
                    restart=outcome.restart,
                    seed=outcome.seed,
                    iterations=outcome.iterations,
                    initial_divergence=outcome.trace.initial_divergence,
                    final_divergence=outcome.final_divergence,
                    kkt_satisfied=outcome.kkt.satisfied,
                    fixed_point_distance=outcome.fixed_point_distance,
                )
                for outcome in outcomes
            ],
            config=config,
        )

    def write_bundle(self, out_dir, best: RunOutcome, report: FitReport) -> Dict[str, Path]:
        out_dir = Path(out_dir)
        paths = {
            "x": write_vector_csv(out_dir / "x.csv", best.x, column="x"),
            "trace": write_trace_csv(out_dir / "trace.csv", best.trace),
            "report": write_json(out_dir / "report.json", success_response(report)),
        }
        logger.info(f"wrote {', '.join(str(p) for p in paths.values())}")
        return paths


def get_fit_service(settings: Optional[Settings] = None) -> FitService:
    return FitService(settings)

import math

import numpy as np
import pytest
from pydantic import ValidationError

import services.experiment_service as experiment_service
from core.exceptions import InfeasibleInputError
from core.signal import autoconvolve
from models.algorithm import RunConfig
from models.experiment import ExperimentKind, ExperimentRun, ExperimentSpec, ExperimentSummary
from services.experiment_service import (
    ExperimentService,
    generate_exact,
    generate_random,
    recovery_error,
)


def test_generate_exact():
    true_x, y = generate_exact(20, seed=3)
    assert true_x.size == 21
    assert y.size == 41
    assert np.all((true_x >= 1.0) & (true_x <= 10.0))
    assert y.sum() == pytest.approx(true_x.sum() ** 2, rel=1e-12)
    np.testing.assert_allclose(y, autoconvolve(true_x))


def test_generate_is_deterministic():
    first_x, first_y = generate_exact(5, seed=11)
    second_x, second_y = generate_exact(5, seed=11)
    np.testing.assert_array_equal(first_x, second_x)
    np.testing.assert_array_equal(first_y, second_y)
    np.testing.assert_array_equal(generate_random(6, 5, seed=2), generate_random(6, 5, seed=2))
    assert not np.array_equal(generate_random(6, 5, seed=2), generate_random(6, 5, seed=3))


def test_generate_random_bounds():
    K = 5
    y = generate_random(12, K, seed=7)
    assert y.size == 25
    u = y / np.arange(1, 26)
    assert np.all((u >= 1.0) & (u <= 2.0 * K * K))


def test_generators_reject_bad_sizes():
    with pytest.raises(ValueError):
        generate_exact(0, seed=1)
    with pytest.raises(ValueError):
        generate_random(3, 0, seed=1)


def test_recovery_error_pads_the_truth():
    assert recovery_error(np.array([2.0, 1.0, 0.5]), np.array([2.0, 1.0])) == pytest.approx(0.25)
    assert recovery_error(np.array([1.0, 1.0]), np.array([1.0, 1.0])) == 0.0


def test_spec_limits():
    with pytest.raises(ValidationError):
        ExperimentSpec(kind=ExperimentKind.EXACT, m=0)
    with pytest.raises(ValidationError):
        ExperimentSpec(kind=ExperimentKind.EXACT, m=2, restarts=0)
    assert ExperimentSpec(kind=ExperimentKind.RANDOM, m=4).n == 8


def test_run_exclusive_outcome_or_error():
    with pytest.raises(ValidationError):
        ExperimentRun(restart=0, init_seed=1)


def test_exact_experiment():
    spec = ExperimentSpec(kind=ExperimentKind.EXACT, m=3, T=50, seed=4, restarts=2)
    result = ExperimentService().run_experiment(spec)
    assert result.true_x.size == 4
    assert result.y.size == 7
    assert len(result.runs) == 2
    assert [run.init_seed for run in result.runs] == [5, 6]
    for run in result.runs:
        assert run.completed
        assert run.outcome.x.size == 7
        assert run.outcome.iterations <= 50
        assert run.recovery_error is not None and run.recovery_error >= 0.0
        divergences = run.outcome.trace.divergences()
        assert np.all(np.diff(divergences) <= 1e-12 * result.y.sum())
    best = result.runs[result.best_restart].outcome
    assert best.final_divergence == min(run.outcome.final_divergence for run in result.runs)
    assert result.divergence_reduction >= 1.0


def test_random_experiment_has_no_recovery():
    spec = ExperimentSpec(kind=ExperimentKind.RANDOM, m=4, K=3, T=40, seed=1, restarts=2)
    result = ExperimentService().run_experiment(spec)
    assert result.true_x is None
    assert result.recovery_errors == [None, None]
    assert result.y.size == 9


def test_single_iteration_single_restart():
    spec = ExperimentSpec(kind=ExperimentKind.RANDOM, m=2, T=1, seed=0, restarts=1)
    result = ExperimentService().run_experiment(spec)
    (run,) = result.runs
    assert run.outcome.iterations == 1
    assert len(run.outcome.trace.rows()) == 2
    assert result.best_restart == 0


def test_experiments_are_reproducible():
    spec = ExperimentSpec(kind=ExperimentKind.EXACT, m=4, T=60, seed=9, restarts=3)
    first = ExperimentService().run_experiment(spec)
    second = ExperimentService().run_experiment(spec)
    for a, b in zip(first.runs, second.runs):
        np.testing.assert_array_equal(a.outcome.x, b.outcome.x)
        np.testing.assert_array_equal(a.outcome.trace.divergences(), b.outcome.trace.divergences())


def test_threaded_restarts_match_serial():
    serial = ExperimentSpec(kind=ExperimentKind.RANDOM, m=3, T=60, seed=5, restarts=3)
    threaded = serial.model_copy(update={"workers": 2})
    first = ExperimentService().run_experiment(serial)
    second = ExperimentService().run_experiment(threaded)
    assert [run.restart for run in second.runs] == [0, 1, 2]
    for a, b in zip(first.runs, second.runs):
        np.testing.assert_array_equal(a.outcome.x, b.outcome.x)


def test_failed_restart_is_recorded(monkeypatch):
    real_run_single = experiment_service.run_single

    def flaky(y, config, restart=0):
        if restart == 1:
            raise InfeasibleInputError("S vanished").at_iteration(3)
        return real_run_single(y, config, restart)

    monkeypatch.setattr(experiment_service, "run_single", flaky)
    spec = ExperimentSpec(kind=ExperimentKind.EXACT, m=2, T=20, seed=2, restarts=3)
    result = ExperimentService().run_experiment(spec)

    failed = result.runs[1]
    assert not failed.completed
    assert failed.error_code == InfeasibleInputError.error_code
    assert failed.init_seed == spec.seed + 1 + 1
    assert len(result.completed_runs) == 2
    assert result.best_restart in (0, 2)

    summary = ExperimentSummary.from_result(result)
    assert summary.runs[1].completed is False
    assert summary.runs[0].final_divergence is not None


def test_summary_omits_traces():
    spec = ExperimentSpec(kind=ExperimentKind.EXACT, m=2, T=10, seed=0, restarts=1)
    summary = ExperimentSummary.from_result(ExperimentService().run_experiment(spec))
    payload = summary.model_dump()
    assert "trace" not in payload["runs"][0]
    assert len(payload["runs"][0]["x"]) == 5
    assert payload["spec"]["kind"] == "exact"


def test_longer_exact_run_keeps_its_invariants():
    spec = ExperimentSpec(kind=ExperimentKind.EXACT, m=20, T=2000, seed=1, restarts=3)
    result = ExperimentService().run_experiment(spec)
    total = result.y.sum()
    for run in result.runs:
        trace = run.outcome.trace
        assert np.all(np.diff(trace.divergences()) <= 1e-12 * total)
        for record in trace.records:
            assert abs(record.mass - total) <= 1e-10 * total
        assert math.isfinite(trace.final_divergence)
        assert trace.final_divergence <= trace.initial_divergence
    assert all(0.0 <= distance < 1e-4 for distance in result.fixed_point_distances)
    summary = ExperimentSummary.from_result(result)
    assert [run.fixed_point_distance for run in summary.runs] == result.fixed_point_distances


def test_exact_case_reaches_a_kkt_point_given_more_iterations():
    # convergence is sublinear while small coordinates decay, so T = 2000 is not enough
    service = ExperimentService(RunConfig(stop_tolerance=None))
    short = service.run_experiment(ExperimentSpec(kind=ExperimentKind.EXACT, m=20, T=2000, seed=1, restarts=3))
    long = service.run_experiment(ExperimentSpec(kind=ExperimentKind.EXACT, m=20, T=16000, seed=1, restarts=3))

    for before, after in zip(short.runs, long.runs):
        assert after.outcome.fixed_point_distance < before.outcome.fixed_point_distance
        assert after.outcome.final_divergence <= before.outcome.final_divergence
    assert any(
        run.outcome.fixed_point_distance <= 1e-8 and run.outcome.kkt.satisfied for run in long.runs
    )


def test_random_case_keeps_its_invariants():
    spec = ExperimentSpec(kind=ExperimentKind.RANDOM, m=12, K=5, T=2000, seed=1, restarts=2)
    result = ExperimentService().run_experiment(spec)
    assert len(result.completed_runs) == 2
    for run in result.runs:
        assert np.all(np.diff(run.outcome.trace.divergences()) <= 1e-12 * result.y.sum())
        assert run.outcome.fixed_point_distance is not None

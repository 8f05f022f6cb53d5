import math

import numpy as np
import pytest
from pydantic import ValidationError

from config.settings import Settings
from core.algorithm import (
    compute_r,
    fixed_point_distance,
    initial_point,
    initial_state,
    kkt_report,
    make_state,
    run,
    run_all,
    run_single,
    step,
)
from core.exceptions import ExitCode, NonFiniteDivergenceError
from core.lifting import build_y_star, tilde_sums
from core.signal import autoconvolve_truncated, gradient, rho
from core.solver import forward_map
from models.algorithm import InitKind, IterationRecord, IterationTrace, RunConfig
from services.experiment_service import generate_exact, generate_random


def record(t, divergence, gain):
    return IterationRecord(
        t=t,
        divergence=divergence,
        gain=gain,
        w_gain=0.0,
        kkt_residual=0.0,
        mass=1.0,
        orthogonality=0.0,
        min_x=1.0,
        zero_count=0,
        solver_residual=0.0,
    )


class TestComputeR:
    def test_example(self):
        np.testing.assert_allclose(compute_r([1.0, 1.0], [2.0, 1.0]), [3.0, 1.0])

    def test_unit_ratio_is_forward_map(self, rng):
        x = rng.uniform(0.5, 2.0, size=7)
        np.testing.assert_allclose(compute_r(x, np.ones(7)), forward_map(x), rtol=1e-12)

    def test_agrees_with_lifted_column_sums(self, rng):
        for _ in range(20):
            size = int(rng.integers(1, 15))
            x = rng.uniform(0.5, 2.0, size=size)
            y = rng.uniform(0.5, 5.0, size=size)
            expected = tilde_sums(build_y_star(x, y)) / 2.0
            np.testing.assert_allclose(compute_r(x, rho(x, y)), expected, rtol=1e-12)


class TestStep:
    def test_perfect_match_is_fixed(self, rng):
        for _ in range(50):
            size = int(rng.integers(1, 20))
            x = rng.uniform(0.5, 2.0, size=size)
            y = autoconvolve_truncated(x)
            new = step(make_state(0, x, y), y)
            np.testing.assert_allclose(new.x, x, rtol=1e-12)
            assert new.t == 1

    def test_zero_coordinate_persists(self):
        y = np.array([1.0, 2.0, 3.0])
        state = make_state(0, [1.0, 1.0, 0.0], y)
        for _ in range(5):
            state = step(state, y)
            assert state.x[2] == 0.0

    def test_implicit_update(self, rng):
        x = rng.uniform(0.5, 2.0, size=6)
        y = rng.uniform(0.5, 5.0, size=6)
        new = step(make_state(0, x, y), y)
        target = x * (-0.5 * gradient(x, y) + np.cumsum(x)[::-1])
        np.testing.assert_allclose(forward_map(new.x), target, rtol=1e-10)

    def test_mass_after_one_step(self, rng):
        x = rng.uniform(0.5, 2.0, size=9)
        y = rng.uniform(0.5, 5.0, size=9)
        new = step(make_state(0, x, y), y)
        assert new.yhat.sum() == pytest.approx(y.sum(), rel=1e-10)

    def test_infinite_initial_divergence(self):
        with pytest.raises(NonFiniteDivergenceError) as info:
            initial_state([1.0, 1.0, 1.0], [0.0, 1.0, 1.0])
        assert info.value.exit_code == ExitCode.NON_FINITE_DIVERGENCE
        assert info.value.iteration == 0


class TestGoldenRuns:
    def test_interior_n1(self):
        outcome = run([4.0, 4.0], RunConfig(seed=3))
        np.testing.assert_allclose(outcome.x, [2.0, 1.0], atol=1e-6)
        assert outcome.kkt.satisfied

    def test_boundary_n1(self):
        outcome = run([9.0, 0.0], RunConfig(seed=3))
        assert outcome.x[0] == pytest.approx(3.0, abs=1e-6)
        assert outcome.x[1] <= 1e-6
        assert outcome.kkt.satisfied

    def test_interior_n2(self):
        outcome = run([1.0, 2.0, 3.0], RunConfig(seed=5, validation_mode=True))
        np.testing.assert_allclose(outcome.x, [1.0, 1.0, 1.0], atol=1e-6)
        assert outcome.final_divergence <= 1e-10

    def test_boundary_n2(self):
        outcome = run([1.0, 4.0, 1.0], RunConfig(seed=5))
        a = 3.0 / math.sqrt(6.0)
        np.testing.assert_allclose(outcome.x, [a, a, 0.0], atol=1e-4)
        assert outcome.final_divergence > 0
        assert outcome.kkt.satisfied
        assert outcome.kkt.gradient[2] == pytest.approx(2.0 / math.sqrt(6.0), abs=1e-4)


def _battery(rng, count):
    for index in range(count):
        m = int(rng.integers(1, 21))
        if index % 2 == 0:
            _, y = generate_exact(m, seed=index)
        else:
            y = generate_random(m, int(rng.integers(1, 6)), seed=index)
        yield index, y


def test_descent_and_conservation_in_validation_mode(rng):
    for index, y in _battery(rng, 100):
        config = RunConfig(max_iterations=200, seed=index, validation_mode=True, stop_tolerance=None)
        outcome = run_single(y, config)
        total = y.sum()
        divergences = outcome.trace.divergences()
        assert np.all(np.diff(divergences) <= 1e-12 * total)
        for rec in outcome.trace.records:
            assert abs(rec.mass - total) <= 1e-10 * total
            assert rec.min_x > 0.0
            assert rec.zero_count == 0
            assert abs(rec.orthogonality) <= 1e-8 * total
            assert abs(rec.gain - rec.y_gain - rec.w_gain_lifted) <= 1e-8 * total
            assert abs(rec.w_gain_lifted - rec.w_gain) <= 1e-8 * total
            assert rec.implicit_residual <= 1e-9 * total
        assert outcome.iterations == 200


def test_w_gain_vanishes():
    _, y = generate_exact(4, seed=11)
    outcome = run_single(y, RunConfig(max_iterations=2000, seed=1, stop_tolerance=None))
    gains = np.array([rec.w_gain for rec in outcome.trace.records])
    decile = gains.size // 10
    assert gains[-decile:].mean() < gains[:decile].mean()


class TestStopping:
    def test_window_rule_stops_converged_runs(self):
        # exact after one step; the window compares t - 10 with t
        outcome = run_single([4.0, 4.0], RunConfig(seed=1))
        assert outcome.stopped_early
        assert 11 <= outcome.iterations < 2000

    def test_disabled_rule_runs_to_the_limit(self):
        outcome = run_single([4.0, 4.0], RunConfig(seed=1, max_iterations=25, stop_tolerance=None))
        assert not outcome.stopped_early
        assert outcome.iterations == 25

    def test_single_iteration(self):
        outcome = run_single([1.0, 2.0, 3.0], RunConfig(max_iterations=1))
        assert outcome.trace.iterations == 1
        assert len(outcome.trace.rows()) == 2
        assert outcome.trace.rows()[0]["gain"] is None


class TestKkt:
    def test_interior_minimizer(self):
        report = kkt_report([2.0, 1.0], [4.0, 4.0])
        assert report.satisfied
        assert report.max_complementarity == pytest.approx(0.0, abs=1e-12)
        assert report.verdict == "KKT-satisfied within tol"

    def test_boundary_minimizer(self):
        a = 3.0 / math.sqrt(6.0)
        report = kkt_report([a, a, 0.0], [1.0, 4.0, 1.0])
        assert report.satisfied
        assert report.boundary == [2]
        assert report.min_boundary_gradient == pytest.approx(2.0 / math.sqrt(6.0))

    def test_negative_boundary_gradient_is_a_violation(self):
        # x_2 = 0 while y_2 is large: moving x_2 up lowers the divergence
        report = kkt_report([1.0, 1.0, 0.0], [1.0, 2.0, 10.0])
        assert not report.satisfied
        assert report.violations == [2]

    def test_random_point_is_not_stationary(self, rng):
        x = rng.uniform(0.5, 2.0, size=6)
        y = rng.uniform(0.5, 5.0, size=6)
        report = kkt_report(x, y)
        assert not report.satisfied
        assert report.max_complementarity > report.tol_kkt


class TestFixedPointDistance:
    def test_perfect_match(self, rng):
        x = rng.uniform(0.5, 2.0, size=8)
        assert fixed_point_distance(x, autoconvolve_truncated(x)) <= 1e-10

    def test_random_point(self, rng):
        x = rng.uniform(0.5, 2.0, size=8)
        y = rng.uniform(0.5, 5.0, size=8)
        assert fixed_point_distance(x, y) > 0


class TestInitialisation:
    def test_random_is_seeded(self):
        y = np.array([1.0, 2.0, 3.0, 4.0])
        config = RunConfig()
        np.testing.assert_array_equal(initial_point(y, config, 7), initial_point(y, config, 7))
        assert not np.array_equal(initial_point(y, config, 7), initial_point(y, config, 8))

    def test_random_range(self):
        y = np.full(4, 4.0)
        x = initial_point(y, RunConfig(), 3)
        scale = math.sqrt(16.0) / 4
        assert np.all(x >= 0.5 * scale) and np.all(x <= 1.5 * scale)

    def test_constant_and_given(self):
        y = np.array([4.0, 4.0])
        np.testing.assert_allclose(initial_point(y, RunConfig(init=InitKind.CONSTANT)), [math.sqrt(8.0) / 2] * 2)
        given = RunConfig(init=InitKind.GIVEN, init_values=[1.0, 3.0])
        np.testing.assert_allclose(initial_point(y, given), [1.0, 3.0])

    def test_given_requires_values(self):
        with pytest.raises(ValidationError):
            RunConfig(init=InitKind.GIVEN)
        with pytest.raises(ValidationError):
            RunConfig(init=InitKind.GIVEN, init_values=[1.0, 0.0])


class TestRunConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [{"max_iterations": 0}, {"tol_kkt": 0.0}, {"init_low": 2.0, "init_high": 1.0}, {"stop_tolerance": -1.0}],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ValidationError):
            RunConfig(**kwargs)

    def test_stop_rule_can_be_disabled(self):
        assert RunConfig(stop_tolerance=None).stop_tolerance is None

    def test_from_settings(self, monkeypatch):
        monkeypatch.setenv("DEAUTOCONV_MAX_ITERATIONS", "17")
        monkeypatch.setenv("DEAUTOCONV_TOL_KKT", "1e-6")
        config = RunConfig.from_settings(Settings(), seed=4)
        assert config.max_iterations == 17
        assert config.tol_kkt == 1e-6
        assert config.seed == 4


class TestRestarts:
    def test_ordered_and_thread_independent(self):
        y = np.array([1.0, 3.0, 2.0, 5.0])
        serial = run_all(y, RunConfig(restarts=3, seed=2, max_iterations=30))
        parallel = run_all(y, RunConfig(restarts=3, seed=2, max_iterations=30, workers=3))
        assert [o.restart for o in parallel] == [0, 1, 2]
        assert [o.seed for o in serial] == [2, 3, 4]
        for a, b in zip(serial, parallel):
            np.testing.assert_array_equal(a.x, b.x)
            np.testing.assert_array_equal(a.trace.divergences(), b.trace.divergences())

    def test_run_returns_best(self):
        y = np.array([1.0, 3.0, 2.0, 5.0])
        outcomes = run_all(y, RunConfig(restarts=3, max_iterations=30))
        best = run(y, RunConfig(restarts=3, max_iterations=30))
        assert best.final_divergence == min(o.final_divergence for o in outcomes)

    def test_degenerate_input_is_flagged(self):
        outcome = run_single([0.0, 1.0, 1.0], RunConfig(max_iterations=5, stop_tolerance=None))
        assert outcome.degenerate_input
        assert outcome.growth_ratio > 0


def test_basin_switch_detection():
    trace = IterationTrace(initial_divergence=10.0, initial_kkt_residual=0.0, initial_mass=1.0)
    divergence = 10.0
    for t in range(1, 61):
        divergence -= 1e-6
        trace.append(record(t, divergence, 1e-6))
    trace.append(record(61, divergence - 1.0, 1.0))
    for t in range(62, 70):
        trace.append(record(t, divergence - 1.0, 0.0))
    assert trace.basin_switches() == [61]

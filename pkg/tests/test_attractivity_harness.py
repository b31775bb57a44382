import logging
import math

import numpy as np
import pytest

from boundedflow.common import ArgumentError, ConditionViolation, UnsupportedProblem
from boundedflow.function_core import GridFunction, GridSpec
from boundedflow.maps.catalog import get_problem
from boundedflow.maps.hypotheses import HypothesisConstants
from boundedflow.maps.term_factory import descriptor_from_dict
from boundedflow.attractivity_harness import (Trajectory, attract_experiment, integrate_ivp, lyapunov_decay_check,
                                              rk4_step, run_attract_experiment)
from boundedflow.picard_solver import Problem

EXATT_GRID = GridSpec(-2.0, 12.0, 561)


@pytest.fixture
def decay_problem():
    """x' = -x."""
    return Problem(
        F=descriptor_from_dict({"kind": "const", "function": {"kind": "constant", "value": 0.0}}),
        G=descriptor_from_dict({"kind": "const", "function": {"kind": "constant", "value": 1.0}}),
        constants=HypothesisConstants(l=1.0, k=0.0, M=1.0, r=0.0, L_F=0.0, L_G=0.0),
    )


def exponential_trajectory(rate, h=0.01, steps=1000, W0=1.0):
    return Trajectory(0.0, h, W0 * np.exp(-rate * h * np.arange(steps + 1)))


def test_rk4_step_accuracy():
    assert float(rk4_step(lambda t, x: x, 0.0, np.array(1.0), 0.1)) == pytest.approx(math.exp(0.1), abs=2e-7)


def test_integrate_linear_decay(decay_problem):
    traj = integrate_ivp(decay_problem, 0.0, [1.0, -2.0], 2.0, 0.01)
    assert traj.states.shape == (201, 2)
    assert traj.width == 2
    assert traj.times[-1] == pytest.approx(2.0)
    assert traj.states[-1].tolist() == pytest.approx([math.exp(-2.0), -2.0 * math.exp(-2.0)], abs=1e-9)
    assert traj.bounded
    assert traj.column(1).states[0] == -2.0


def test_integrate_rejects_nonlocal_problems():
    with pytest.raises(UnsupportedProblem):
        integrate_ivp(get_problem("c2pi"), 0.0, 0.1, 1.0, 0.01)


def test_integrate_rejects_bad_steps(decay_problem):
    with pytest.raises(ArgumentError):
        integrate_ivp(decay_problem, 0.0, 1.0, 1.0, 0.01)
    with pytest.raises(ArgumentError):
        integrate_ivp(decay_problem, 0.0, 1.0, 2.0, 0.0)


def test_decay_faster_than_rate_passes():
    report = lyapunov_decay_check(exponential_trajectory(0.6), GridFunction.constant(0.0, 0.0, 10.0, 11), 0.5)
    assert report.passed
    assert report.W0 == 1.0
    assert report.max_ratio <= 1.0
    assert report.integral <= report.integral_bound


def test_decay_slower_than_rate_fails():
    report = lyapunov_decay_check(exponential_trajectory(0.6), GridFunction.constant(0.0, 0.0, 10.0, 11), 2.0)
    assert not report.passed
    assert report.max_ratio > 1.05
    assert report.to_dict()["pass"] is False


def test_deep_decay_does_not_underflow():
    traj = exponential_trajectory(80.0, h=0.001, steps=10000, W0=0.5)
    report = lyapunov_decay_check(traj, GridFunction.constant(0.0, 0.0, 10.0, 11), 75.0)
    assert report.passed
    assert math.isfinite(report.max_ratio)


def test_start_on_solution_passes():
    traj = Trajectory(0.0, 0.01, np.zeros(101))
    report = lyapunov_decay_check(traj, GridFunction.constant(0.0, 0.0, 1.0, 5), 0.5)
    assert report.passed
    assert report.max_ratio == 0.0


def test_decay_check_argument_errors():
    x_star = GridFunction.constant(0.0, 0.0, 1.0, 5)
    with pytest.raises(ArgumentError):
        lyapunov_decay_check(Trajectory(20.0, 0.01, np.ones(11)), x_star, 0.5)
    with pytest.raises(ArgumentError):
        lyapunov_decay_check(Trajectory(0.0, 0.01, np.ones((11, 2))), x_star, 0.5)
    with pytest.raises(ArgumentError):
        lyapunov_decay_check(Trajectory(0.0, 0.01, np.ones(11)), x_star, 0.0)


def test_failed_condition_is_raised_first():
    with pytest.raises(ConditionViolation) as info:
        run_attract_experiment(get_problem("c2pi", L_G=5.0), GridSpec(-2.0, 2.0, 41), [0.1], 1.0, 0.01)
    assert info.value.rate < 0


def test_nonlocal_problem_is_unsupported():
    with pytest.raises(UnsupportedProblem):
        run_attract_experiment(get_problem("c2pi"), GridSpec(-2.0, 2.0, 41), [0.1], 1.0, 0.01, lam=0.5)


def test_start_outside_solve_window():
    with pytest.raises(ArgumentError):
        run_attract_experiment(get_problem("exatt"), GridSpec(-2.0, 2.0, 41), [0.1], 1.0, 0.01, t_start=5.0)


def test_no_perturbations():
    result = run_attract_experiment(get_problem("exatt"), GridSpec(-2.0, 2.0, 81), [], 1.0, 0.01)
    assert result.reports == []
    assert result.trajectory is None
    assert result.solve_report.converged
    assert result.lambda_used == pytest.approx(0.5)


@pytest.fixture(scope="module")
def exatt_result():
    return run_attract_experiment(get_problem("exatt"), EXATT_GRID, [0.1, -0.1, 0.3], 10.0, 1e-3)


def test_exatt_perturbations_decay(exatt_result):
    result = exatt_result
    assert [report.perturbation for report in result.reports] == [0.1, -0.1, 0.3]
    assert all(report.passed for report in result.reports)
    assert all(report.lambda_used == pytest.approx(0.5) for report in result.reports)
    assert result.trajectory.width == 3
    assert result.reports[2].W0 == pytest.approx(0.3)


def test_lyapunov_functional_decreases_step_by_step(exatt_result):
    traj = exatt_result.trajectory
    x_star = exatt_result.solve_report.solution
    slack = 0.05
    for i in range(traj.width):
        W = np.abs(traj.column(i).states - x_star(traj.times))
        active = W[:-1] > 1e-3
        assert np.count_nonzero(active) > 100
        assert np.all(W[1:][active] <= W[:-1][active] * (1.0 + 10.0 * traj.h * slack))


def test_rk4_converges_at_fourth_order():
    p = get_problem("exatt")
    runs = [integrate_ivp(p, 0.0, [0.2, 0.35], 2.0, h).states for h in (0.02, 0.01, 0.005)]
    coarse = np.max(np.abs(runs[0] - runs[1][::2]))
    fine = np.max(np.abs(runs[1] - runs[2][::2]))
    assert fine > 0.0
    assert 12.0 <= coarse / fine <= 20.0


def test_decay_check_warns_when_trajectory_outruns_solution(caplog):
    traj = exponential_trajectory(0.6, h=0.01, steps=500)
    with caplog.at_level(logging.WARNING, logger="attractivity_harness"):
        report = lyapunov_decay_check(traj, GridFunction.constant(0.0, 0.0, 2.0, 11), 0.5)
    assert report.passed
    assert "runs past x*" in caplog.text
    assert "201 of 501 steps" in caplog.text


def test_decay_check_is_quiet_inside_the_solution_window(caplog):
    with caplog.at_level(logging.WARNING, logger="attractivity_harness"):
        lyapunov_decay_check(exponential_trajectory(0.6), GridFunction.constant(0.0, 0.0, 10.0, 11), 0.5)
    assert "runs past x*" not in caplog.text


def test_attract_experiment_returns_reports():
    reports = attract_experiment(get_problem("exatt"), GridSpec(-1.0, 4.0, 201), [0.2], 3.0, 1e-2, max_workers=2)
    assert len(reports) == 1
    assert reports[0].passed

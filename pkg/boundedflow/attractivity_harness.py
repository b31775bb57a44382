#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Attractivity harness for boundedflow.
This module integrates perturbed solutions of x' = -G(x, t) x + F(x, t)
forward in time with the classical Runge-Kutta scheme and checks that the
distance W(t) = |x(t) - x*(t)| to a computed bounded solution x* decays at
least like W(t_start) exp(-lambda (t - t_start)), with
lambda = l - L_G max(M, -k) - L_F.

Only pointwise superpositions have an initial value problem: the value of a
convolution or seminorm term at t depends on the unknown on a whole
interval.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .common import ArgumentError, ConditionViolation, EvaluationError, UnsupportedProblem, parallel_map
from .function_core import GridFunction, GridSpec
from .picard_solver import PLUS_G, Problem, SolveReport, solve_picard

# Setup logger
logger = logging.getLogger("attractivity_harness")

DEFAULT_SLACK = 0.05
# Interpolation and solve error of x* sit well below this level
DEFAULT_NOISE_FLOOR = 1e-6

# The envelope check skips the first steps after t_start
TRANSIENT_STEPS = 2


@dataclass(frozen=True)
class Trajectory:
    """States x(t_start + i h) of one or several (columns) integrations."""
    t_start: float
    h: float
    states: np.ndarray
    method: str = "rk4"
    bound: float = math.inf
    bounded: bool = True

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.h * np.arange(self.states.shape[0])

    @property
    def width(self) -> int:
        return 1 if self.states.ndim == 1 else self.states.shape[1]

    def column(self, i: int) -> "Trajectory":
        """Single-start trajectory of column i."""
        states = self.states if self.states.ndim == 1 else self.states[:, i]
        return Trajectory(self.t_start, self.h, states, self.method, self.bound,
                          bool(np.all(np.abs(states) <= self.bound)))


@dataclass(frozen=True)
class DecayReport:
    """Lyapunov decay of W(t) = |x(t) - x*(t)| against W0 exp(-lambda (t - t0))."""
    W0: float
    lambda_used: float
    max_ratio: float
    integral: float
    integral_bound: float
    passed: bool
    perturbation: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "perturbation": self.perturbation,
            "W0": self.W0,
            "lambda": self.lambda_used,
            "max_ratio": self.max_ratio,
            "integral": self.integral,
            "integral_bound": self.integral_bound,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class AttractResult:
    """Everything an attractivity run produced."""
    reports: List[DecayReport]
    trajectory: Optional[Trajectory]
    solve_report: SolveReport
    lambda_used: float


def _rhs(p: Problem):
    sign = -1.0 if p.sign == PLUS_G else 1.0

    def rhs(t: float, v: np.ndarray) -> np.ndarray:
        tt = np.full(np.shape(v), t)
        return sign * p.G.pointwise(v, tt) * v + p.F.pointwise(v, tt)

    return rhs


def rk4_step(f, t: float, x: np.ndarray, h: float) -> np.ndarray:
    """One classical Runge-Kutta step for x' = f(t, x)."""
    k1 = h * f(t, x)
    k2 = h * f(t + 0.5 * h, x + 0.5 * k1)
    k3 = h * f(t + 0.5 * h, x + 0.5 * k2)
    k4 = h * f(t + h, x + k3)
    return x + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def integrate_ivp(p: Problem, t_start: float, x_start, t_end: float, h: float) -> Trajectory:
    """
    Integrate x' = -G(x(t), t) x + F(x(t), t) (x' = G x + F for minus_G) by RK4

    Several starting values are integrated together, one column each.

    Args:
        p: Problem with pointwise-only F and G
        t_start: Initial time
        x_start: Initial value or array of initial values
        t_end: Final time (t_end > t_start)
        h: Step (the last step lands on t_start + N h with N = round((t_end - t_start) / h))

    Returns:
        Trajectory: States on the uniform time grid

    Raises:
        UnsupportedProblem: If F or G is not a pointwise superposition
        EvaluationError: If the states stop being finite
    """
    if not p.pointwise_only:
        raise UnsupportedProblem(f"Problem '{p.name}' has nonlocal terms; no pointwise initial value problem")
    if not h > 0 or not t_end > t_start:
        raise ArgumentError(f"Need h > 0 and t_end > t_start (h={h}, [{t_start}, {t_end}])")

    steps = max(1, int(round((t_end - t_start) / h)))
    x = np.array(x_start, dtype=float, copy=True)
    states = np.empty((steps + 1,) + x.shape)
    states[0] = x
    f = _rhs(p)

    for i in range(steps):
        t = t_start + i * h
        x = rk4_step(f, t, x, h)
        if not np.all(np.isfinite(x)):
            raise EvaluationError("Non-finite state in the initial value problem", t + h)
        states[i + 1] = x

    F_sup = p.F.sup_bound(p.box)
    bound = F_sup / p.constants.l + float(np.max(np.abs(np.atleast_1d(x_start)))) + 1.0
    bounded = bool(np.all(np.abs(states) <= bound))
    if not bounded:
        logger.warning(f"Trajectory of '{p.name}' exceeds its a-priori bound {bound:.4g}")
    return Trajectory(t_start=t_start, h=h, states=states, bound=bound, bounded=bounded)


def lyapunov_decay_check(traj: Trajectory, x_star: GridFunction, lam: float, slack: float = DEFAULT_SLACK,
                         noise_floor: float = DEFAULT_NOISE_FLOOR,
                         perturbation: Optional[float] = None) -> DecayReport:
    """
    Check W(t) <= W0 exp(-lambda (t - t0)) (1 + slack) and h sum W <= W0 / lambda (1 + slack)

    W(t) = |x(t) - x*(t)| on the times where the trajectory and x* overlap;
    t0 is the first overlapping time. A trajectory that runs past x* is
    checked on the overlap only, with a warning. The envelope check starts
    two steps after t0 and ignores W below the noise floor.

    Args:
        traj: Single-start trajectory
        x_star: Bounded solution on a grid
        lam: Decay rate (> 0)
        slack: Relative slack of both checks
        noise_floor: W values at or below it are not compared with the envelope
        perturbation: Initial offset recorded in the report

    Returns:
        DecayReport: Observed decay against the envelope

    Raises:
        ArgumentError: If the trajectory and x* do not overlap
    """
    if traj.states.ndim != 1:
        raise ArgumentError("lyapunov_decay_check expects a single-start trajectory")
    if not lam > 0:
        raise ArgumentError(f"Decay rate must be positive, got {lam}")

    times = traj.times
    inside = (times >= x_star.t0 - 1e-12) & (times <= x_star.t1 + 1e-12)
    if not np.any(inside):
        raise ArgumentError(f"Trajectory [{times[0]}, {times[-1]}] does not overlap x* on [{x_star.t0}, {x_star.t1}]")

    if not np.all(inside):
        logger.warning(f"Trajectory [{times[0]:.6g}, {times[-1]:.6g}] runs past x* on [{x_star.t0:.6g}, "
                       f"{x_star.t1:.6g}]; decay checked on {int(np.sum(inside))} of {times.size} steps")

    t = times[inside]
    W = np.abs(traj.states[inside] - x_star(np.clip(t, x_star.t0, x_star.t1)))
    W0 = float(W[0])
    elapsed = t - t[0]

    checked = (elapsed >= TRANSIENT_STEPS * traj.h - 1e-12) & (W > noise_floor)
    if W0 <= noise_floor:
        max_ratio = 0.0 if not np.any(checked) else math.inf
    elif np.any(checked):
        # log-space ratio: the envelope underflows long before W reaches the floor
        log_ratio = np.log(W[checked]) - math.log(W0) + lam * elapsed[checked]
        max_ratio = float(np.exp(np.max(log_ratio)))
    else:
        max_ratio = 0.0

    integral = float(traj.h * np.sum(W))
    integral_bound = W0 / lam * (1.0 + slack)
    passed = max_ratio <= 1.0 + slack and integral <= integral_bound + traj.h * noise_floor * W.size
    return DecayReport(W0=W0, lambda_used=lam, max_ratio=max_ratio, integral=integral,
                       integral_bound=integral_bound, passed=bool(passed), perturbation=perturbation)


def run_attract_experiment(p: Problem, solve_grid: GridSpec, perturbations: Sequence[float], horizon: float,
                           h: float, t_start: float = 0.0, slack: float = DEFAULT_SLACK,
                           lam: Optional[float] = None, max_workers: Optional[int] = None,
                           **solver_options) -> AttractResult:
    """
    Solve for x*, integrate x*(t_start) + delta forward and check the decay for every delta

    Args:
        p: Pointwise-only problem with a positive attractivity rate
        solve_grid: Window of the Picard solve (should cover [t_start, t_start + horizon])
        perturbations: Initial offsets delta
        horizon: Integration length
        h: Integration step
        t_start: Initial time (inside the solve window)
        slack: Relative slack of the decay checks
        lam: Decay rate (default: the rate from the declared constants)
        max_workers: Parallelism cap of the per-perturbation checks
        **solver_options: Passed on to solve_picard

    Returns:
        AttractResult: Reports, the joint trajectory, the solve report and the rate used

    Raises:
        ConditionViolation: If the rate is not positive
        UnsupportedProblem: If the problem has nonlocal terms
    """
    rate = p.constants.lambda_ if lam is None else lam
    if not rate > 0:
        raise ConditionViolation(f"Attractivity condition fails for '{p.name}'", rate)
    if not p.pointwise_only:
        raise UnsupportedProblem(f"Problem '{p.name}' has nonlocal terms; attractivity needs pointwise maps")
    if not solve_grid.t0 <= t_start <= solve_grid.t1:
        raise ArgumentError(f"t_start={t_start} outside the solve window [{solve_grid.t0}, {solve_grid.t1}]")

    solve_report = solve_picard(p, solve_grid, **solver_options)
    x_star = solve_report.solution
    deltas = [float(delta) for delta in perturbations]
    if not deltas:
        return AttractResult(reports=[], trajectory=None, solve_report=solve_report, lambda_used=rate)

    starts = float(x_star(t_start)) + np.array(deltas)
    logger.info(f"Integrating {len(deltas)} perturbed start(s) of '{p.name}' over [{t_start}, {t_start + horizon}]")
    trajectory = integrate_ivp(p, t_start, starts, t_start + horizon, h)

    reports = parallel_map(
        lambda i: lyapunov_decay_check(trajectory.column(i), x_star, rate, slack, perturbation=deltas[i]),
        range(len(deltas)),
        max_workers,
    )
    failed = sum(1 for report in reports if not report.passed)
    if failed:
        logger.warning(f"{failed} of {len(reports)} decay check(s) failed")
    return AttractResult(reports=reports, trajectory=trajectory, solve_report=solve_report, lambda_used=rate)


def attract_experiment(p: Problem, solve_grid: GridSpec, perturbations: Sequence[float], horizon: float,
                       h: float, **options) -> List[DecayReport]:
    """
    One DecayReport per perturbation; see run_attract_experiment

    Returns:
        list: Decay reports in perturbation order
    """
    return run_attract_experiment(p, solve_grid, perturbations, horizon, h, **options).reports

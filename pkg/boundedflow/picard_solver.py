#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Picard solver for boundedflow.
This module solves x'(t) + G(x, t) x(t) = F(x, t) for a bounded solution on
the whole line by iterating the fixed-point map

    Gamma(x) = T(F(x), G(x))

on a uniform grid, and x' - G(x, t) x = F(x, t) through the reverse map
T~(-F(x), G(x)). When the declared constants make Gamma a contraction the
report carries an a-posteriori error certificate.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .common import ArgumentError, EvaluationError
from .exp_kernel_operator import (Tolerances, TruncationPlan, apply_T, apply_T_reverse, central_difference)
from .function_core import GridFunction, GridSpec, evaluate
from .maps.base_term import BaseTerm, Box
from .maps.hypotheses import HypothesisConstants, apply_map

# Setup logger
logger = logging.getLogger("picard_solver")

PLUS_G = "plus_G"
MINUS_G = "minus_G"

# Smallest damping reached by repeated oscillation fallbacks
MIN_DAMPING = 1.0 / 16.0
FALLBACK_DAMPING = 0.5
OSCILLATION_STREAK = 2

DEFAULT_STEP_TOL = 1e-8
DEFAULT_RESIDUAL_TOL = 1e-4
DEFAULT_MAX_ITER = 200


@dataclass(frozen=True)
class Problem:
    """
    A bounded-solution problem x' + G(x, t) x = F(x, t) (sign plus_G) or
    x' - G(x, t) x = F(x, t) (sign minus_G) with its declared constants.
    """
    F: BaseTerm
    G: BaseTerm
    constants: HypothesisConstants
    sign: str = PLUS_G
    name: str = "custom"
    initial_value: Optional[float] = None

    def __post_init__(self):
        if self.sign not in (PLUS_G, MINUS_G):
            raise ArgumentError(f"Unknown sign '{self.sign}', expected {PLUS_G} or {MINUS_G}")
        if self.initial_value is not None:
            lo, hi = self.box
            if not lo <= self.initial_value <= hi:
                raise ArgumentError(f"Initial value {self.initial_value} outside the box [{lo}, {hi}]")

    @property
    def box(self) -> Box:
        """Invariant box of the fixed-point map: [k, M], or [-M, -k] for minus_G."""
        c = self.constants
        return (c.k, c.M) if self.sign == PLUS_G else (-c.M, -c.k)

    @property
    def pointwise_only(self) -> bool:
        return self.F.pointwise_only and self.G.pointwise_only

    def starting_value(self) -> float:
        lo, hi = self.box
        return 0.5 * (lo + hi) if self.initial_value is None else float(self.initial_value)

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "name": self.name,
            "sign": self.sign,
            "F": self.F.to_dict(),
            "G": self.G.to_dict(),
            "constants": self.constants.to_dict(),
        }
        if self.initial_value is not None:
            data["initial_value"] = self.initial_value
        return data


@dataclass(frozen=True)
class SolveReport:
    """Outcome of a Picard run."""
    solution: GridFunction
    iterations: int
    step_norms: Tuple[float, ...]
    residual: float
    box_violation: float
    iterate_min: float
    iterate_max: float
    certified_error: Optional[float]
    converged: bool
    damping: float
    q: float
    warnings: Tuple[str, ...] = field(default_factory=tuple)
    within_box: bool = True

    @property
    def last_step(self) -> float:
        return self.step_norms[-1] if self.step_norms else math.inf

    def to_dict(self) -> Dict[str, Any]:
        return {
            "iterations": self.iterations,
            "step_norms": list(self.step_norms),
            "residual": self.residual,
            "box_violation": self.box_violation,
            "iterate_min": self.iterate_min,
            "iterate_max": self.iterate_max,
            "certified_error": self.certified_error,
            "converged": self.converged,
            "damping": self.damping,
            "contraction_factor": self.q,
            "within_box": self.within_box,
            "warnings": list(self.warnings),
        }


def working_grid(p: Problem, grid: GridSpec, tolerances: Tolerances) -> Tuple[GridSpec, int]:
    """
    Output grid padded by the truncation depth on the side the integrals read

    Args:
        p: Problem
        grid: Output window
        tolerances: Tail and quadrature budget

    Returns:
        tuple: (padded grid with the same step, index of grid.t0 in it)
    """
    sup_F = p.F.sup_bound(p.box)
    depth = TruncationPlan.build(p.constants.l, sup_F, tolerances.tail_tol).depth
    if p.sign == PLUS_G:
        padded = grid.extended(left=depth)
    else:
        padded = grid.extended(right=depth)
    offset = int(round((grid.t0 - padded.t0) / grid.h))
    return padded, offset


def gamma(p: Problem, x: GridFunction, grid: GridSpec, tolerances: Tolerances = Tolerances(),
          map_quad_tol: Optional[float] = None) -> GridFunction:
    """
    The fixed-point map sampled on the grid

    plus_G: Gamma(x) = T(F(x), G(x)); minus_G: Gamma(x) = T~(-F(x), G(x)).

    Args:
        p: Problem
        x: Current iterate (clamp extension outside its window)
        grid: Output window
        tolerances: Tail and quadrature budget of the operator
        map_quad_tol: Tolerance of the nonlocal map quadratures (default: quad_tol / 10)

    Returns:
        GridFunction: Gamma(x) on the grid
    """
    xb = x.as_bounded("iterate")
    quad = tolerances.quad_tol / 10.0 if map_quad_tol is None else map_quad_tol
    f = apply_map(p.F, xb, p.box, quad)
    g = apply_map(p.G, xb, p.box, quad)
    if p.sign == PLUS_G:
        return apply_T(f, g, p.constants.l, grid, tolerances)
    return apply_T_reverse(f.scaled(-1.0), g, p.constants.l, grid, tolerances)


def residual(p: Problem, x: GridFunction, window: Optional[Tuple[int, int]] = None,
             quad_tol: float = 1e-10) -> float:
    """
    max over interior nodes of |x' + G(x) x - F(x)| (|x' - G(x) x - F(x)| for minus_G)

    The derivative is the fourth-order central difference.

    Args:
        p: Problem
        x: Candidate solution
        window: Node index range (i0, i1) to check, default the whole grid
        quad_tol: Tolerance of the nonlocal map quadratures

    Returns:
        float: Residual of the equation
    """
    if x.n < 5:
        raise ArgumentError("Residual needs at least five grid nodes")
    i0, i1 = window if window is not None else (0, x.n - 1)
    i0, i1 = max(i0, 2), min(i1, x.n - 3)
    if i1 < i0:
        raise ArgumentError("Residual window has no interior nodes")

    derivative = central_difference(x.values, x.h)[i0 - 2:i1 - 1]
    nodes = x.nodes[i0:i1 + 1]
    values = x.values[i0:i1 + 1]
    xb = x.as_bounded("candidate")
    F_values = evaluate(apply_map(p.F, xb, p.box, quad_tol), nodes)
    G_values = evaluate(apply_map(p.G, xb, p.box, quad_tol), nodes)
    sign = 1.0 if p.sign == PLUS_G else -1.0
    return float(np.max(np.abs(derivative + sign * G_values * values - F_values)))


def certify(report: SolveReport, c: HypothesisConstants, damping: Optional[float] = None) -> Optional[float]:
    """
    A-posteriori sup-norm error bound of the last iterate

    For the damped map (1 - theta) x + theta Gamma(x), a rho-contraction with
    rho = 1 - theta + theta q, the bound is rho / (1 - rho) times the last
    step, i.e. q / (1 - q) times the last step when theta = 1.

    Args:
        report: Solver report
        c: Hypothesis constants
        damping: Damping theta (default: the report's final damping)

    Returns:
        Optional[float]: Error bound, None when q >= 1
    """
    q = c.q
    if q >= 1.0 or not report.step_norms:
        return None
    theta = report.damping if damping is None else damping
    return (1.0 - theta + theta * q) / (theta * (1.0 - q)) * report.last_step


def default_box_slack(p: Problem, tolerances: Tolerances) -> float:
    """Excursion outside the box attributed to operator error."""
    lo, hi = p.box
    return 10.0 * tolerances.total * max(1.0, abs(lo), abs(hi))


def solve_picard(p: Problem, grid: GridSpec, x0: Optional[GridFunction] = None,
                 step_tol: float = DEFAULT_STEP_TOL, max_iter: int = DEFAULT_MAX_ITER,
                 tolerances: Tolerances = Tolerances(), residual_tol: float = DEFAULT_RESIDUAL_TOL,
                 damping: float = 1.0, box_slack: Optional[float] = None) -> SolveReport:
    """
    Iterate x_{n+1} = (1 - theta) x_n + theta Gamma(x_n) on a padded grid

    Non-convergence is reported, not raised. Two consecutive increases of the
    step norm halve the damping (first to 0.5, then down to 1/16).

    Args:
        p: Problem
        grid: Output window
        x0: Starting iterate (default: the constant starting value of the problem)
        step_tol: Sup-norm step threshold
        max_iter: Iteration cap
        tolerances: Tail and quadrature budget of the operator
        residual_tol: Residual threshold of the second convergence gate
        damping: Initial damping theta in (0, 1]
        box_slack: Allowed excursion outside the box (default from the tolerances)

    Returns:
        SolveReport: Solution on the output window and run diagnostics
    """
    if not 0.0 < damping <= 1.0:
        raise ArgumentError(f"Damping must lie in (0, 1], got {damping}")
    if max_iter < 1 or not step_tol > 0:
        raise ArgumentError("max_iter must be positive and step_tol > 0")

    c = p.constants
    lo, hi = p.box
    work, offset = working_grid(p, grid, tolerances)
    if box_slack is None:
        box_slack = default_box_slack(p, tolerances)

    if x0 is None:
        x = GridFunction.constant(p.starting_value(), work.t0, work.t1, work.n)
    else:
        x = GridFunction(work.t0, work.t1, evaluate(x0.as_bounded("x0"), work.nodes))

    logger.info(f"Picard on '{p.name}': window [{grid.t0}, {grid.t1}] padded to [{work.t0:.3f}, {work.t1:.3f}], "
                f"n={work.n}, q={c.q:.4g}")

    theta = damping
    step_norms: List[float] = []
    warnings: List[str] = []
    iterate_min, iterate_max = float(np.min(x.values)), float(np.max(x.values))
    increases = 0
    iterations = 0

    for iterations in range(1, max_iter + 1):
        try:
            image = gamma(p, x, work, tolerances).values
        except EvaluationError as e:
            warnings.append(f"iteration {iterations}: {e}")
            logger.warning(f"Iteration {iterations} failed: {e}")
            break
        new_values = (1.0 - theta) * x.values + theta * image
        step = float(np.max(np.abs(new_values - x.values)))
        x = x.with_values(new_values)

        iterate_min = min(iterate_min, float(np.min(new_values)))
        iterate_max = max(iterate_max, float(np.max(new_values)))
        logger.debug(f"iteration {iterations}: step={step:.3e}, theta={theta}")

        if step_norms and step > step_norms[-1]:
            increases += 1
        else:
            increases = 0
        step_norms.append(step)

        if step <= step_tol:
            break

        if increases >= OSCILLATION_STREAK and theta > MIN_DAMPING:
            theta = FALLBACK_DAMPING if theta > FALLBACK_DAMPING else max(theta / 2.0, MIN_DAMPING)
            increases = 0
            warnings.append(f"oscillation at iteration {iterations}: damping lowered to {theta}")
            logger.warning(f"Step norm increased twice in a row, damping lowered to {theta}")

    box_violation = max(0.0, lo - iterate_min, iterate_max - hi)
    if box_violation > box_slack:
        message = f"iterates leave the box [{lo:.6g}, {hi:.6g}] by {box_violation:.3e}"
        warnings.append(message)
        logger.warning(f"HypothesisViolation: {message}")

    solution = x.window(offset, offset + grid.n - 1)
    res = residual(p, x, (offset, offset + grid.n - 1), tolerances.quad_tol / 10.0)
    last = step_norms[-1] if step_norms else math.inf
    converged = last <= step_tol and res <= residual_tol
    if not converged:
        reason = "step tolerance not reached" if last > step_tol else f"residual {res:.3e} above {residual_tol:.1e}"
        warnings.append(f"not converged after {iterations} iterations: {reason}")
        logger.warning(f"'{p.name}' did not converge: {reason}")
    else:
        logger.info(f"'{p.name}' converged in {iterations} iterations (residual {res:.3e})")

    report = SolveReport(
        solution=solution,
        iterations=iterations,
        step_norms=tuple(step_norms),
        residual=res,
        box_violation=box_violation,
        iterate_min=iterate_min,
        iterate_max=iterate_max,
        certified_error=None,
        converged=bool(converged),
        damping=theta,
        q=c.q,
        warnings=tuple(warnings),
        within_box=box_violation <= box_slack,
    )
    return replace(report, certified_error=certify(report, c))

#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Operator check suite for boundedflow.
This module runs the numerical checks of the exponential-kernel operator over
a fixed corpus of closed-form inputs and reports every measured value next to
its threshold. Each check is a plain function of a VerifyContext so it can be
run on its own.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from .common import parallel_map
from .exp_kernel_operator import (Tolerances, apply_T, apply_T_reverse, check_unit_mass,
                                  derivative_identity_residual, equicontinuity_bound, equicontinuity_modulus,
                                  ergodic_defect, lipschitz_bound_check, mirror_defect, periodicity_defect)
from .function_core import BoundedFunction, GridSpec, TrigTerm, decay, trig_polynomial

# Setup logger
logger = logging.getLogger("verify_suite")

UNIT_MASS_TOLERANCES = Tolerances(tail_tol=5e-7, quad_tol=5e-7)
UNIT_MASS_MAX_DEVIATION = 1e-6
UNIT_MASS_POINTS = 20
UNIT_MASS_WINDOW = (-50.0, 50.0)

ORACLE_MAX_ERROR = 1e-6
ORACLE_GRID = GridSpec(-10.0, 10.0, 401)

LIPSCHITZ_PAIRS = 200
LIPSCHITZ_R = 2.0
LIPSCHITZ_L = 1.0
LIPSCHITZ_SLACK = 1e-3

# Each halving of h must shrink the residual at least this much
DERIVATIVE_MIN_RATIO = 12.0
DERIVATIVE_NODES = (41, 81, 161)
DERIVATIVE_TOLERANCES = Tolerances(tail_tol=1e-10, quad_tol=1e-10)

PERIODICITY_FACTOR = 10.0
ERGODIC_RADII = (10.0, 40.0)
ERGODIC_MAX_RATIO = 0.5

CORPUS_GRID = GridSpec(-5.0, 5.0, 201)
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class VerifyContext:
    """Tolerances and seed shared by every check of one run."""
    tolerances: Tolerances = Tolerances()
    seed: int = 0


@dataclass(frozen=True)
class CheckResult:
    """Measured value of one check against its threshold."""
    name: str
    measured: float
    threshold: float
    passed: bool
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "measured": self.measured, "threshold": self.threshold,
                "pass": self.passed, "details": self.details}


def _trig(offset: float, *terms) -> BoundedFunction:
    return trig_polynomial(offset, [TrigTerm(amp, freq, 0.0, fn) for amp, freq, fn in terms])


def _random_trig(rng: np.random.Generator, offset: float, spread: float) -> BoundedFunction:
    amps = rng.uniform(-1.0, 1.0, 3)
    amps *= spread / max(float(np.sum(np.abs(amps))), 1e-12)
    freqs = rng.uniform(0.2, 3.0, 3)
    phases = rng.uniform(0.0, 2.0 * math.pi, 3)
    fns = rng.choice(["sin", "cos"], 3)
    return trig_polynomial(offset, [TrigTerm(float(a), float(w), float(p), str(fn))
                                    for a, w, p, fn in zip(amps, freqs, phases, fns)])


def unit_mass_corpus() -> Dict[str, tuple]:
    """Kernel rates with their lower bounds; the last one is ex0's G at x = 0."""
    return {
        "g=1": (BoundedFunction.constant(1.0), 1.0),
        "g=3": (BoundedFunction.constant(3.0), 3.0),
        "g=3+sin2t": (_trig(3.0, (1.0, 2.0, "sin")), 2.0),
        "g=ex0_G(0)": (_trig(3.0, (1.0, 2.0, "sin")) + decay(), 2.0),
    }


def check_unit_mass_corpus(ctx: VerifyContext) -> CheckResult:
    rng = np.random.default_rng(ctx.seed)
    ts = rng.uniform(*UNIT_MASS_WINDOW, UNIT_MASS_POINTS)
    deviations = {}
    for name, (g, l) in unit_mass_corpus().items():
        masses = np.array([check_unit_mass(g, l, float(t), UNIT_MASS_TOLERANCES) for t in ts])
        deviations[name] = float(np.max(np.abs(masses - 1.0)))
    worst = max(deviations.values())
    return CheckResult("unit_mass", worst, UNIT_MASS_MAX_DEVIATION, worst <= UNIT_MASS_MAX_DEVIATION,
                       {"per_rate": deviations, "points": UNIT_MASS_POINTS})


def check_forward_oracle(ctx: VerifyContext) -> CheckResult:
    # T(sin, 1) = (sin t - cos t) / 2
    values = apply_T(_trig(0.0, (1.0, 1.0, "sin")), BoundedFunction.constant(1.0), 1.0, ORACLE_GRID,
                     ctx.tolerances).values
    t = ORACLE_GRID.nodes
    error = float(np.max(np.abs(values - 0.5 * (np.sin(t) - np.cos(t)))))
    return CheckResult("forward_oracle", error, ORACLE_MAX_ERROR, error <= ORACLE_MAX_ERROR)


def check_reverse_oracle(ctx: VerifyContext) -> CheckResult:
    # T~(cos, 2) = (2 cos t - sin t) / 5
    values = apply_T_reverse(_trig(0.0, (1.0, 1.0, "cos")), BoundedFunction.constant(2.0), 2.0, ORACLE_GRID,
                             ctx.tolerances).values
    t = ORACLE_GRID.nodes
    error = float(np.max(np.abs(values - (2.0 * np.cos(t) - np.sin(t)) / 5.0)))
    return CheckResult("reverse_oracle", error, ORACLE_MAX_ERROR, error <= ORACLE_MAX_ERROR)


def check_lipschitz_pairs(ctx: VerifyContext, pairs: int = LIPSCHITZ_PAIRS) -> CheckResult:
    """Random trig pairs with ||f|| <= 2 and g >= 1; reports the worst lhs / rhs."""
    rng = np.random.default_rng(ctx.seed + 7)
    worst, failures = 0.0, 0
    for _ in range(pairs):
        f1, f2 = (_random_trig(rng, 0.0, LIPSCHITZ_R * rng.uniform(0.2, 1.0)) for _ in range(2))
        g1, g2 = (_random_trig(rng, 2.0, rng.uniform(0.0, 1.0)) for _ in range(2))
        report = lipschitz_bound_check(f1, g1, f2, g2, LIPSCHITZ_L, LIPSCHITZ_R, CORPUS_GRID, ctx.tolerances,
                                       slack=LIPSCHITZ_SLACK)
        if report.rhs > 0:
            worst = max(worst, report.lhs / report.rhs)
        failures += 0 if report.passed else 1
    return CheckResult("lipschitz_bound", worst, 1.0 + LIPSCHITZ_SLACK, failures == 0,
                       {"pairs": pairs, "failures": failures})


def check_equicontinuity(ctx: VerifyContext) -> CheckResult:
    f, g = _trig(0.0, (1.0, 1.0, "sin")), BoundedFunction.constant(1.0)
    modulus = equicontinuity_modulus(f, g, 1.0, ORACLE_GRID, ctx.tolerances)
    threshold = (equicontinuity_bound(f, g, 1.0, (ORACLE_GRID.t0, ORACLE_GRID.t1))
                 + 2.0 * ctx.tolerances.total / ORACLE_GRID.h)
    return CheckResult("equicontinuity", modulus, threshold, modulus <= threshold)


def check_derivative_identity(ctx: VerifyContext) -> CheckResult:
    """Residual of T' + gT - f on three nested grids; fourth-order decay expected."""
    f = _trig(0.0, (1.0, 1.0, "sin"), (1.0, SQRT2, "cos"))
    g = _trig(2.0, (1.0, 1.0, "sin"))
    tolerances = Tolerances(min(ctx.tolerances.tail_tol, DERIVATIVE_TOLERANCES.tail_tol),
                            min(ctx.tolerances.quad_tol, DERIVATIVE_TOLERANCES.quad_tol))
    residuals, floors = [], []
    for n in DERIVATIVE_NODES:
        grid = GridSpec(CORPUS_GRID.t0, CORPUS_GRID.t1, n)
        residuals.append(derivative_identity_residual(apply_T(f, g, 1.0, grid, tolerances), f, g))
        floors.append(50.0 * tolerances.total / grid.h)

    ratios = [coarse / fine if fine > 0 else math.inf for coarse, fine in zip(residuals, residuals[1:])]
    # Once the quadrature floor is hit the ratio carries no information
    passed = all(ratio >= DERIVATIVE_MIN_RATIO or fine <= floor
                 for ratio, fine, floor in zip(ratios, residuals[1:], floors[1:]))
    return CheckResult("derivative_identity", min(ratios), DERIVATIVE_MIN_RATIO, passed,
                       {"residuals": residuals, "ratios": ratios})


def check_periodicity(ctx: VerifyContext) -> CheckResult:
    f = _trig(0.0, (1.0, 1.0, "sin"), (0.5, 2.0, "cos"))
    g = _trig(2.0, (1.0, 1.0, "cos"))
    defect = periodicity_defect(f, g, 1.0, 2.0 * math.pi, CORPUS_GRID, ctx.tolerances)
    threshold = PERIODICITY_FACTOR * ctx.tolerances.total
    return CheckResult("periodicity", defect, threshold, defect <= threshold)


def check_mirror(ctx: VerifyContext) -> CheckResult:
    f = _trig(0.0, (1.0, 1.0, "sin"), (0.5, SQRT2, "cos"))
    g = _trig(2.0, (1.0, 1.0, "sin"))
    defect = mirror_defect(f, g, 1.0, CORPUS_GRID, ctx.tolerances)
    threshold = PERIODICITY_FACTOR * ctx.tolerances.total
    return CheckResult("mirror", defect, threshold, defect <= threshold)


def check_ergodic(ctx: VerifyContext) -> CheckResult:
    """The mean of T(decay, g) over [-r, r] must shrink as r grows."""
    f_periodic = _trig(0.0, (1.0, 1.0, "sin"))
    g = _trig(2.0, (1.0, 1.0, "cos"))
    means = [ergodic_defect(f_periodic, decay(), g, 1.0, r, int(20 * r) + 1, ctx.tolerances)
             for r in ERGODIC_RADII]
    ratio = means[1] / means[0] if means[0] > 0 else 0.0
    return CheckResult("ergodic", ratio, ERGODIC_MAX_RATIO, ratio <= ERGODIC_MAX_RATIO,
                       {"radii": list(ERGODIC_RADII), "means": means})


VERIFY_CHECKS: Dict[str, Callable[[VerifyContext], CheckResult]] = {
    "unit_mass": check_unit_mass_corpus,
    "forward_oracle": check_forward_oracle,
    "reverse_oracle": check_reverse_oracle,
    "lipschitz_bound": check_lipschitz_pairs,
    "equicontinuity": check_equicontinuity,
    "derivative_identity": check_derivative_identity,
    "periodicity": check_periodicity,
    "mirror": check_mirror,
    "ergodic": check_ergodic,
}


def run_verify_suite(ctx: VerifyContext, names: Optional[List[str]] = None,
                     max_workers: Optional[int] = None) -> List[CheckResult]:
    """
    Run the named checks (default: all) in registry order

    Args:
        ctx: Shared tolerances and seed
        names: Subset of VERIFY_CHECKS keys
        max_workers: Parallelism cap

    Returns:
        list: One CheckResult per check
    """
    selected = list(VERIFY_CHECKS) if names is None else list(names)
    unknown = [name for name in selected if name not in VERIFY_CHECKS]
    if unknown:
        raise KeyError(f"Unknown check(s): {', '.join(unknown)}")

    results = parallel_map(lambda name: VERIFY_CHECKS[name](ctx), selected, max_workers)
    for result in results:
        log = logger.info if result.passed else logger.warning
        log(f"{result.name}: measured {result.measured:.3e} (threshold {result.threshold:.3e}) "
            f"{'pass' if result.passed else 'FAIL'}")
    return results

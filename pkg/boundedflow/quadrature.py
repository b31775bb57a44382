#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Quadrature helpers for boundedflow.
Composite Simpson sums on uniform grids with a step-halving (Richardson)
error estimate. The integrand may return one row per integral, so a whole
batch of integrals sharing the same nodes is refined together.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.integrate import simpson

from .common import EvaluationError, ToleranceError

# Setup logger
logger = logging.getLogger("quadrature")

# Richardson denominator for Simpson: error(S_h) ~ (S_h - S_2h) / (2^4 - 1)
RICHARDSON_SIMPSON = 15.0

DEFAULT_INITIAL_INTERVALS = 16
DEFAULT_MAX_LEVELS = 14


@dataclass(frozen=True)
class QuadratureResult:
    """Value of one integral (or a batch of them) with its error estimate."""
    value: Union[float, np.ndarray]
    error: float
    intervals: int


def simpson_error(fine: np.ndarray, coarse: np.ndarray) -> np.ndarray:
    """
    Richardson error estimate of a Simpson sum from the sum at twice the step

    Args:
        fine: Simpson sums at step h
        coarse: Simpson sums at step 2h on the same interval

    Returns:
        numpy.ndarray: Estimated absolute errors of the fine sums
    """
    return np.abs(fine - coarse) / RICHARDSON_SIMPSON


def integrate_uniform(sample: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                      tol: float, initial_intervals: int = DEFAULT_INITIAL_INTERVALS,
                      max_levels: int = DEFAULT_MAX_LEVELS) -> QuadratureResult:
    """
    Integrate over [a, b] by composite Simpson, halving the step until the
    error estimate meets the tolerance

    Args:
        sample: Integrand evaluated on an array of nodes; the last axis of the
            result runs over the nodes, leading axes index independent integrals
        a: Lower limit
        b: Upper limit (b >= a)
        tol: Absolute tolerance applied to every integral of the batch
        initial_intervals: Interval count of the first level (rounded up to even)
        max_levels: Maximum number of step halvings

    Returns:
        QuadratureResult: Integral value(s), worst error estimate and final interval count

    Raises:
        ToleranceError: If the tolerance is not met after max_levels halvings
        EvaluationError: If the integrand produces non-finite values
    """
    if b == a:
        values = np.asarray(sample(np.array([a])))
        return QuadratureResult(np.zeros(values.shape[:-1]) if values.ndim > 1 else 0.0, 0.0, 0)

    m = max(2, initial_intervals + (initial_intervals % 2))
    nodes = np.linspace(a, b, m + 1)
    y = _checked(sample(nodes), "integrand")
    current = simpson(y, dx=(b - a) / m, axis=-1)
    error = np.inf

    for level in range(max_levels):
        h = (b - a) / m
        midpoints = a + h * (np.arange(m) + 0.5)
        y_mid = _checked(sample(midpoints), "integrand")

        # Interleave old nodes and new midpoints along the node axis
        refined = np.empty(y.shape[:-1] + (2 * m + 1,), dtype=float)
        refined[..., 0::2] = y
        refined[..., 1::2] = y_mid

        y = refined
        m *= 2
        fine = simpson(y, dx=(b - a) / m, axis=-1)
        error = float(np.max(simpson_error(fine, current)))
        current = fine

        if error <= tol:
            logger.debug(f"Simpson converged on [{a}, {b}] with {m} intervals (error {error:.2e})")
            return QuadratureResult(_as_scalar(current), error, m)

    raise ToleranceError(f"Simpson quadrature on [{a}, {b}] did not reach tolerance {tol:.2e} "
                         f"with {m} intervals", error)


def _checked(values, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise EvaluationError(f"Non-finite {what} value encountered")
    return values


def _as_scalar(value):
    value = np.asarray(value)
    return float(value) if value.ndim == 0 else value

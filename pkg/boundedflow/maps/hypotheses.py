#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Hypothesis constants for boundedflow.
This module applies map descriptors to argument functions and estimates the
constants the solver relies on: the infimum l of G, the box [k, M] holding
F/G, the bound r of F on the box and the Lipschitz constants L_F and L_G.

Sampled estimates point in the wrong direction for a certificate (a sampled
infimum is an upper bound, a sampled Lipschitz quotient a lower bound), so
they are reported next to the declared constants and never replace them.
Interval propagation through the term tree gives bounds in the right
direction.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional

import numpy as np

from ..common import ArgumentError, HypothesisViolation, parallel_map
from ..function_core import BoundedFunction, GridFunction, evaluate
from .base_term import BaseTerm, Box, EvaluationContext
from .terms import ConvolutionTerm

# Setup logger
logger = logging.getLogger("hypotheses")

PROBE_FREQUENCY_RANGE = (0.1, 5.0)
PROBE_TRIG_TERMS = 3
PROBE_GRID_STEP = 0.5

# Spacing of the samples of |x - y| used as Lipschitz quotient denominators
DENOMINATOR_STEP = 1e-2


@dataclass(frozen=True)
class HypothesisConstants:
    """Declared constants of a problem: l, the box [k, M], r, L_F and L_G."""
    l: float
    k: float
    M: float
    r: float
    L_F: float
    L_G: float

    def __post_init__(self):
        if not self.l > 0:
            raise ArgumentError(f"l must be positive, got {self.l}")
        if not self.k <= self.M:
            raise ArgumentError(f"Box bounds must satisfy k <= M, got [{self.k}, {self.M}]")
        if self.r < 0 or self.L_F < 0 or self.L_G < 0:
            raise ArgumentError("r, L_F and L_G must be non-negative")

    @property
    def q(self) -> float:
        return contraction_factor(self)

    @property
    def lambda_(self) -> float:
        return attractivity_rate(self)

    def to_dict(self) -> Dict[str, float]:
        data = asdict(self)
        data.update(q=self.q, **{"lambda": self.lambda_})
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, float]) -> "HypothesisConstants":
        return cls(**{key: float(data[key]) for key in ("l", "k", "M", "r", "L_F", "L_G")})


@dataclass(frozen=True)
class PropagatedConstants:
    """Interval range and Lipschitz constant of a descriptor on a box."""
    lower: float
    upper: float
    lipschitz: float

    @property
    def sup(self) -> float:
        return max(abs(self.lower), abs(self.upper))


@dataclass(frozen=True)
class BoxReport:
    """Observed range of F/G over probes with values in [k, M]."""
    k: float
    M: float
    ratio_min: float
    ratio_max: float
    g_min: float
    passed: bool


def contraction_factor(c: HypothesisConstants) -> float:
    """
    q = max(r / l^2, 1 / l) (L_F + L_G); q < 1 makes the fixed-point map a contraction

    Args:
        c: Hypothesis constants

    Returns:
        float: Contraction factor
    """
    return max(c.r / c.l ** 2, 1.0 / c.l) * (c.L_F + c.L_G)


def attractivity_rate(c: HypothesisConstants) -> float:
    """
    lambda = l - L_G max(M, -k) - L_F; lambda > 0 gives exponential attraction

    Args:
        c: Hypothesis constants

    Returns:
        float: Attractivity rate
    """
    return c.l - c.L_G * max(c.M, -c.k) - c.L_F


def apply_map(m: BaseTerm, x: BoundedFunction, box: Optional[Box] = None,
              quad_tol: float = 1e-10, cache: bool = True) -> BoundedFunction:
    """
    The bounded function t -> m(x)(t)

    Nonlocal values (convolutions, seminorms) are computed lazily and cached
    inside the returned function, which is therefore not thread-safe.

    Args:
        m: Map descriptor
        x: Argument
        box: Bounds of x used for the sup bound (default: the claimed range of x)
        quad_tol: Tolerance of the nonlocal quadratures
        cache: Whether nonlocal values are memoised per evaluation point set

    Returns:
        BoundedFunction: m(x) with sup bound from interval propagation
    """
    box = x.value_range if box is None else box
    context = EvaluationContext(x, quad_tol=quad_tol, cache=cache)
    lo, hi = m.value_range(box)
    return BoundedFunction(
        evaluator=lambda t: m.evaluate(context, np.asarray(t, dtype=float)),
        sup_bound=max(abs(lo), abs(hi)),
        kind="composite",
        lower=lo,
        upper=hi,
        label=f"{m.kind}(x)",
    )


def propagated_constants(m: BaseTerm, box: Box) -> PropagatedConstants:
    """
    Interval-propagated range and Lipschitz constant of a descriptor

    Args:
        m: Map descriptor
        box: (k, M) bounds of the argument

    Returns:
        PropagatedConstants: lower/upper bounds of m(x)(t) and the Lipschitz constant
    """
    lo, hi = m.value_range(box)
    return PropagatedConstants(lower=lo, upper=hi, lipschitz=m.lipschitz(box))


def positive_solution_expected(mF: BaseTerm, box: Box) -> bool:
    """True when F >= 0 on the box, so a non-negative solution exists."""
    return mF.value_range(box)[0] >= 0.0


def _kernel_reach(m: BaseTerm) -> float:
    return max([term.kernel.radius for term in m.walk() if isinstance(term, ConvolutionTerm)], default=0.0)


def _clipped(values_fn, k: float, M: float, label: str) -> BoundedFunction:
    return BoundedFunction(
        evaluator=lambda t: np.clip(values_fn(np.asarray(t, dtype=float)), k, M),
        sup_bound=max(abs(k), abs(M)),
        kind="probe",
        lower=k,
        upper=M,
        label=label,
    )


def probe_functions(box: Box, t_window: Box, n_probes: int, seed: int = 0,
                    reach: float = 0.0) -> List[BoundedFunction]:
    """
    Random functions with values in the box

    A third of the probes are constants spanning the box, a third are
    clipped trigonometric polynomials with frequencies in [0.1, 5] and the
    rest are clipped random grid functions.

    Args:
        box: (k, M) value bounds
        t_window: Window where the probes vary
        n_probes: Number of probes (>= 1)
        seed: Seed of the random generator
        reach: Extra margin around the window and [0, 1] for nonlocal terms

    Returns:
        list: Probe functions
    """
    if n_probes < 1:
        raise ArgumentError(f"n_probes must be at least 1, got {n_probes}")
    k, M = box
    rng = np.random.default_rng(seed)
    mid, half = 0.5 * (k + M), 0.5 * (M - k)

    n_const = max(1, n_probes // 3)
    n_trig = (n_probes - n_const + 1) // 2
    n_grid = n_probes - n_const - n_trig

    probes = [BoundedFunction.constant(c) for c in (np.linspace(k, M, n_const) if n_const > 1 else [mid])]

    for i in range(n_trig):
        freqs = rng.uniform(*PROBE_FREQUENCY_RANGE, size=PROBE_TRIG_TERMS)
        phases = rng.uniform(0.0, 2.0 * math.pi, size=PROBE_TRIG_TERMS)
        amps = rng.uniform(-1.0, 1.0, size=PROBE_TRIG_TERMS)
        # Amplitude up to 1.5 half widths so clipping touches both bounds
        scale = 1.5 * half / max(np.sum(np.abs(amps)), 1e-12)
        centre = mid + rng.uniform(-0.5, 0.5) * half

        def trig(t, freqs=freqs, phases=phases, amps=amps, scale=scale, centre=centre):
            return centre + scale * np.sum(amps * np.sin(np.multiply.outer(t, freqs) + phases), axis=-1)

        probes.append(_clipped(trig, k, M, f"trig-probe-{i}"))

    lo = min(t_window[0], 0.0) - reach - 1.0
    hi = max(t_window[1], 1.0) + reach + 1.0
    n_nodes = max(3, int(math.ceil((hi - lo) / PROBE_GRID_STEP)) + 1)
    for i in range(n_grid):
        grid = GridFunction(lo, hi, rng.uniform(k, M, size=n_nodes)) if M > k \
            else GridFunction.constant(k, lo, hi, n_nodes)
        probes.append(_clipped(grid, k, M, f"grid-probe-{i}"))

    return probes


def _sample_points(t_window: Box, n_samples: int) -> np.ndarray:
    if not t_window[0] < t_window[1] or n_samples < 2:
        raise ArgumentError(f"Invalid sampling window {t_window} with n_samples={n_samples}")
    return np.linspace(t_window[0], t_window[1], n_samples)


def _map_samples(m: BaseTerm, probes: List[BoundedFunction], ts: np.ndarray, box: Box,
                 quad_tol: float, max_workers: Optional[int]) -> List[np.ndarray]:
    return parallel_map(lambda x: evaluate(apply_map(m, x, box, quad_tol), ts), probes, max_workers)


def estimate_inf(m: BaseTerm, box: Box, t_window: Box = (-20.0, 20.0), n_samples: int = 401,
                 n_probes: int = 24, seed: int = 0, quad_tol: float = 1e-10,
                 max_workers: Optional[int] = None) -> float:
    """
    Sampled infimum of m(x)(t) over probes x in the box and sampled t

    Args:
        m: Map descriptor (typically G)
        box: (k, M) bounds of the probes
        t_window: Sampling window in t
        n_samples: Number of sampled t
        n_probes: Number of probe functions
        seed: Seed of the probe generator
        quad_tol: Tolerance of the nonlocal quadratures
        max_workers: Parallelism cap

    Returns:
        float: Minimum observed value (an upper bound of the true infimum)
    """
    ts = _sample_points(t_window, n_samples)
    probes = probe_functions(box, t_window, n_probes, seed, _kernel_reach(m))
    return float(min(np.min(values) for values in _map_samples(m, probes, ts, box, quad_tol, max_workers)))


def estimate_sup(m: BaseTerm, box: Box, t_window: Box = (-20.0, 20.0), n_samples: int = 401,
                 n_probes: int = 24, seed: int = 0, quad_tol: float = 1e-10,
                 max_workers: Optional[int] = None) -> float:
    """
    Sampled sup of |m(x)(t)| over probes x in the box and sampled t (an estimate of r for F)

    Args:
        m: Map descriptor
        box: (k, M) bounds of the probes
        t_window: Sampling window in t
        n_samples: Number of sampled t
        n_probes: Number of probe functions
        seed: Seed of the probe generator
        quad_tol: Tolerance of the nonlocal quadratures
        max_workers: Parallelism cap

    Returns:
        float: Maximum observed absolute value
    """
    ts = _sample_points(t_window, n_samples)
    probes = probe_functions(box, t_window, n_probes, seed, _kernel_reach(m))
    return float(max(np.max(np.abs(values))
                     for values in _map_samples(m, probes, ts, box, quad_tol, max_workers)))


def estimate_lipschitz(m: BaseTerm, box: Box, n_pairs: int = 24, t_window: Box = (-20.0, 20.0),
                       n_samples: int = 401, seed: int = 0, quad_tol: float = 1e-10,
                       max_workers: Optional[int] = None) -> float:
    """
    Largest empirical quotient ||m(x) - m(y)|| / ||x - y|| over random probe pairs

    The denominator is sampled densely on the window widened by the kernel
    reach and on [0, 1], and always includes the numerator's sample points.

    Args:
        m: Map descriptor
        box: (k, M) bounds of the probes
        n_pairs: Number of probe pairs (>= 2)
        t_window: Sampling window in t
        n_samples: Number of sampled t for the numerator
        seed: Seed of the probe generator
        quad_tol: Tolerance of the nonlocal quadratures
        max_workers: Parallelism cap

    Returns:
        float: Maximum quotient (a lower bound of the Lipschitz constant)
    """
    if n_pairs < 2:
        raise ArgumentError(f"n_pairs must be at least 2, got {n_pairs}")
    ts = _sample_points(t_window, n_samples)
    reach = _kernel_reach(m)
    probes = probe_functions(box, t_window, max(2, n_pairs), seed, reach)

    lo = min(t_window[0], 0.0) - reach
    hi = max(t_window[1], 1.0) + reach
    dense = np.unique(np.concatenate([
        np.linspace(lo, hi, int(math.ceil((hi - lo) / DENOMINATOR_STEP)) + 1),
        np.linspace(0.0, 1.0, 201),
        ts,
    ]))

    rng = np.random.default_rng(seed + 1)
    pairs = [tuple(rng.choice(len(probes), size=2, replace=False)) for _ in range(n_pairs)]
    images = _map_samples(m, probes, ts, box, quad_tol, max_workers)
    dense_values = [evaluate(x, dense) for x in probes]

    width = max(box[1] - box[0], 1.0)
    best = 0.0
    for i, j in pairs:
        denominator = float(np.max(np.abs(dense_values[i] - dense_values[j])))
        if denominator <= 1e-9 * width:
            # Degenerate pair
            continue
        best = max(best, float(np.max(np.abs(images[i] - images[j]))) / denominator)
    return best


def verify_box(mF: BaseTerm, mG: BaseTerm, k: float, M: float, t_window: Box = (-20.0, 20.0),
               n_samples: int = 401, n_probes: int = 24, seed: int = 0, quad_tol: float = 1e-10,
               max_workers: Optional[int] = None) -> BoxReport:
    """
    Check k <= F(x)(t) / G(x)(t) <= M over probes x with values in [k, M]

    Args:
        mF: Descriptor of F
        mG: Descriptor of G
        k: Lower box bound
        M: Upper box bound (k <= M)
        t_window: Sampling window in t
        n_samples: Number of sampled t
        n_probes: Number of probe functions
        seed: Seed of the probe generator
        quad_tol: Tolerance of the nonlocal quadratures
        max_workers: Parallelism cap

    Returns:
        BoxReport: Observed ratio range and pass flag

    Raises:
        HypothesisViolation: If G(x)(t) <= 0 at a probed point
    """
    if not k <= M:
        raise ArgumentError(f"Box bounds must satisfy k <= M, got [{k}, {M}]")
    box = (k, M)
    ts = _sample_points(t_window, n_samples)
    probes = probe_functions(box, t_window, n_probes, seed, max(_kernel_reach(mF), _kernel_reach(mG)))

    def ratio(x):
        f_values = evaluate(apply_map(mF, x, box, quad_tol), ts)
        g_values = evaluate(apply_map(mG, x, box, quad_tol), ts)
        bad = np.flatnonzero(g_values <= 0.0)
        if bad.size:
            raise HypothesisViolation(f"G = {g_values[bad[0]]:.6g} <= 0 at t={ts[bad[0]]!r} for probe {x.label}")
        return f_values / g_values, float(np.min(g_values))

    results = parallel_map(ratio, probes, max_workers)
    ratio_min = float(min(np.min(r) for r, _ in results))
    ratio_max = float(max(np.max(r) for r, _ in results))
    g_min = float(min(g for _, g in results))
    tol = 1e-12 * max(1.0, abs(k), abs(M))
    passed = k - tol <= ratio_min and ratio_max <= M + tol
    if not passed:
        logger.warning(f"F/G leaves [{k}, {M}]: observed [{ratio_min:.6g}, {ratio_max:.6g}]")
    return BoxReport(k=k, M=M, ratio_min=ratio_min, ratio_max=ratio_max, g_min=g_min, passed=bool(passed))

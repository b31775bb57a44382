#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Function representations for boundedflow.
This module provides bounded continuous functions on the real line (closed
form, grid sampled or composite), integrable kernels, and the function-space
diagnostics used to inspect them: convolution, the [0, 1] integral seminorm,
ergodic means and a sampled search for epsilon-almost-periods.

Convolution follows the convention

    (x * alpha)(t) = integral of x(s) alpha(s - t) ds,

which is the reflection of the usual one (alpha(t - s)); for symmetric
kernels the two agree.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.special import erfcinv

from .common import ArgumentError, EvaluationError
from .quadrature import integrate_uniform

# Setup logger
logger = logging.getLogger("function_core")

# Cubic Hermite basis functions h10, h11 peak at 4/27 on the unit interval
HERMITE_OVERSHOOT = 4.0 / 27.0

# Row block used when a batch of integrals is evaluated on a 2D node array
CONVOLUTION_BLOCK = 2048

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class BoundedFunction:
    """
    A real function on R with a claimed bound |f(t)| <= sup_bound.

    The evaluator is vectorised: it receives a numpy array of any shape and
    returns an array of the same shape. `lower`/`upper` optionally narrow the
    claimed range; they feed the interval propagation of map descriptors.
    """
    evaluator: Evaluator
    sup_bound: float
    kind: str = "closed-form"
    lower: Optional[float] = None
    upper: Optional[float] = None
    label: str = ""

    def __call__(self, t):
        return evaluate(self, t)

    @property
    def value_range(self) -> Tuple[float, float]:
        lo = -self.sup_bound if self.lower is None else max(self.lower, -self.sup_bound)
        hi = self.sup_bound if self.upper is None else min(self.upper, self.sup_bound)
        return lo, hi

    def __add__(self, other: "BoundedFunction") -> "BoundedFunction":
        lo1, hi1 = self.value_range
        lo2, hi2 = other.value_range
        return BoundedFunction(
            evaluator=lambda t, a=self, b=other: a.evaluator(t) + b.evaluator(t),
            sup_bound=self.sup_bound + other.sup_bound,
            kind="sum",
            lower=lo1 + lo2,
            upper=hi1 + hi2,
            label=f"({self.label} + {other.label})",
        )

    def __mul__(self, other: "BoundedFunction") -> "BoundedFunction":
        lo, hi = interval_product(self.value_range, other.value_range)
        return BoundedFunction(
            evaluator=lambda t, a=self, b=other: a.evaluator(t) * b.evaluator(t),
            sup_bound=self.sup_bound * other.sup_bound,
            kind="product",
            lower=lo,
            upper=hi,
            label=f"({self.label} * {other.label})",
        )

    def scaled(self, c: float) -> "BoundedFunction":
        lo, hi = sorted((c * self.value_range[0], c * self.value_range[1]))
        return BoundedFunction(
            evaluator=lambda t, a=self: c * a.evaluator(t),
            sup_bound=abs(c) * self.sup_bound,
            kind="scaled",
            lower=lo,
            upper=hi,
            label=f"{c!r}*{self.label}",
        )

    def reflected(self) -> "BoundedFunction":
        """t -> f(-t), same bounds."""
        return BoundedFunction(
            evaluator=lambda t, a=self: a.evaluator(-np.asarray(t, dtype=float)),
            sup_bound=self.sup_bound,
            kind=self.kind,
            lower=self.lower,
            upper=self.upper,
            label=f"{self.label}(-t)",
        )

    @classmethod
    def constant(cls, c: float) -> "BoundedFunction":
        c = float(c)
        return cls(
            evaluator=lambda t: np.full(np.shape(t), c),
            sup_bound=abs(c),
            kind="closed-form",
            lower=c,
            upper=c,
            label=repr(c),
        )

    @classmethod
    def closed_form(cls, fn: Evaluator, sup_bound: float, lower: Optional[float] = None,
                    upper: Optional[float] = None, label: str = "") -> "BoundedFunction":
        return cls(evaluator=fn, sup_bound=float(sup_bound), kind="closed-form",
                   lower=lower, upper=upper, label=label)


@dataclass(frozen=True)
class TrigTerm:
    """amp * fn(freq * t + phase) with fn in {sin, cos}."""
    amp: float
    freq: float
    phase: float = 0.0
    fn: str = "sin"

    def __post_init__(self):
        if self.fn not in ("sin", "cos"):
            raise ArgumentError(f"Unsupported trigonometric term: {self.fn}")


def trig_polynomial(offset: float, terms: Sequence[TrigTerm] = ()) -> BoundedFunction:
    """
    offset + sum of trigonometric terms, with sup bound |offset| + sum |amp|

    Args:
        offset: Constant part
        terms: Trigonometric terms

    Returns:
        BoundedFunction: The trigonometric polynomial
    """
    terms = tuple(terms)
    spread = sum(abs(term.amp) for term in terms)

    def evaluator(t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, float(offset))
        for term in terms:
            fn = np.sin if term.fn == "sin" else np.cos
            out = out + term.amp * fn(term.freq * t + term.phase)
        return out

    label = " + ".join([repr(offset)] + [f"{term.amp}*{term.fn}({term.freq}t+{term.phase})" for term in terms])
    return BoundedFunction(
        evaluator=evaluator,
        sup_bound=abs(offset) + spread,
        kind="closed-form",
        lower=offset - spread,
        upper=offset + spread,
        label=label,
    )


def decay() -> BoundedFunction:
    """(1 + t^2)^-1, the ergodic weight used by the built-in problems."""
    return BoundedFunction(
        evaluator=lambda t: 1.0 / (1.0 + np.asarray(t, dtype=float) ** 2),
        sup_bound=1.0,
        kind="closed-form",
        lower=0.0,
        upper=1.0,
        label="(1+t^2)^-1",
    )


def interval_product(a: Tuple[float, float], b: Tuple[float, float]) -> Tuple[float, float]:
    """Range of u*v for u in a and v in b."""
    corners = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return min(corners), max(corners)


def evaluate(f: BoundedFunction, t):
    """
    Evaluate a bounded function

    Args:
        f: Function to evaluate
        t: Scalar or array of points

    Returns:
        float or numpy.ndarray: f(t), same shape as t

    Raises:
        EvaluationError: If a value is not finite (reports the first offending t)
    """
    t_arr = np.asarray(t, dtype=float)
    values = np.asarray(f.evaluator(t_arr), dtype=float)
    if values.shape != t_arr.shape:
        values = np.broadcast_to(values, t_arr.shape)
    if not np.all(np.isfinite(values)):
        bad = np.flatnonzero(~np.isfinite(values))[0]
        raise EvaluationError(f"Non-finite value of {f.label or f.kind}", float(t_arr.ravel()[bad]))
    return float(values) if values.ndim == 0 else values


def sup_norm_estimate(f: BoundedFunction, t0: float, t1: float, n: int) -> float:
    """
    Empirical sup norm of f on [t0, t1] from n uniform samples

    Args:
        f: Function to sample
        t0: Window start
        t1: Window end (t1 > t0)
        n: Sample count (n >= 2)

    Returns:
        float: max |f| over the samples (a lower bound of the true sup norm)
    """
    if not t0 < t1 or n < 2:
        raise ArgumentError(f"Invalid sampling window [{t0}, {t1}] with n={n}")
    return float(np.max(np.abs(evaluate(f, np.linspace(t0, t1, n)))))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """
    Uniform samples on [t0, t1] with cubic Hermite interpolation.

    Slopes are finite differences of the samples. Outside the window the
    function is extended either by clamping to the endpoint values or
    periodically with period `period` (extension="periodic").
    """
    t0: float
    t1: float
    values: np.ndarray
    extension: str = "clamp"
    period: Optional[float] = None
    _spline: CubicHermiteSpline = field(init=False, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 1 or values.size < 2:
            raise ArgumentError("GridFunction needs at least two samples")
        if not self.t0 < self.t1:
            raise ArgumentError(f"Invalid grid window [{self.t0}, {self.t1}]")
        if self.extension not in ("clamp", "periodic"):
            raise ArgumentError(f"Unknown extension rule: {self.extension}")
        if self.extension == "periodic" and not (self.period and 0 < self.period <= self.t1 - self.t0):
            raise ArgumentError(f"Periodic extension needs 0 < period <= t1 - t0, got {self.period}")
        if not np.all(np.isfinite(values)):
            raise EvaluationError("GridFunction samples must be finite")

        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        slopes = np.gradient(values, self.h, edge_order=2 if values.size >= 3 else 1)
        object.__setattr__(self, "_spline", CubicHermiteSpline(self.nodes, values, slopes, extrapolate=True))

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def h(self) -> float:
        return (self.t1 - self.t0) / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n)

    @property
    def slopes(self) -> np.ndarray:
        return self._spline.derivative()(self.nodes)

    def _wrap(self, t: np.ndarray) -> np.ndarray:
        if self.extension == "periodic":
            return self.t0 + np.mod(t - self.t0, self.period)
        return np.clip(t, self.t0, self.t1)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        tt = self._wrap(t_arr)
        out = np.asarray(self._spline(tt), dtype=float)

        # Node values are returned exactly
        flat = tt.ravel()
        idx = np.clip(np.rint((flat - self.t0) / self.h).astype(np.int64), 0, self.n - 1)
        hit = self.nodes[idx] == flat
        if np.any(hit):
            out = out.reshape(-1).copy()
            out[hit] = self.values[idx[hit]]
            out = out.reshape(t_arr.shape)
        return float(out) if out.ndim == 0 else out

    def hermite_bound(self) -> float:
        """Sup bound of the interpolant including the Hermite overshoot."""
        m = self.slopes
        y = np.abs(self.values)
        cell = np.maximum(y[:-1], y[1:]) + HERMITE_OVERSHOOT * self.h * (np.abs(m[:-1]) + np.abs(m[1:]))
        return float(np.max(cell))

    def as_bounded(self, label: str = "grid") -> BoundedFunction:
        return BoundedFunction(evaluator=self, sup_bound=self.hermite_bound(), kind="grid", label=label)

    def window(self, i0: int, i1: int) -> "GridFunction":
        """Sub-grid on nodes i0..i1 inclusive (clamp extension)."""
        nodes = self.nodes
        return GridFunction(float(nodes[i0]), float(nodes[i1]), self.values[i0:i1 + 1].copy())

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.t0, self.t1, values, self.extension, self.period)

    @classmethod
    def from_function(cls, f, t0: float, t1: float, n: int, extension: str = "clamp",
                      period: Optional[float] = None) -> "GridFunction":
        values = evaluate(f, np.linspace(t0, t1, n)) if isinstance(f, BoundedFunction) \
            else np.asarray(f(np.linspace(t0, t1, n)), dtype=float)
        return cls(t0, t1, values, extension, period)

    @classmethod
    def constant(cls, c: float, t0: float, t1: float, n: int) -> "GridFunction":
        return cls(t0, t1, np.full(n, float(c)))


@dataclass(frozen=True)
class L1Kernel:
    """
    An integrable kernel truncated to [-radius, radius].

    `l1_norm` is the L1 norm of the untruncated kernel; the mass outside the
    radius is at most `tail_tol`.
    """
    evaluator: Evaluator
    l1_norm: float
    radius: float
    tail_tol: float = 0.0
    label: str = ""

    def __post_init__(self):
        if not self.radius > 0 or not math.isfinite(self.radius):
            raise ArgumentError(f"Kernel radius must be finite and positive, got {self.radius}")
        if self.l1_norm < 0:
            raise ArgumentError("Kernel L1 norm must be non-negative")

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(np.abs(u) <= self.radius, self.evaluator(u), 0.0)

    def truncated_mass(self, quad_tol: float = 1e-10) -> float:
        """Numerical integral of |alpha| over [-radius, radius]."""
        return float(integrate_uniform(lambda u: np.abs(self(u)), -self.radius, self.radius,
                                       quad_tol, initial_intervals=64).value)

    @classmethod
    def triangular(cls, radius: float = 1.0, mass: float = 1.0) -> "L1Kernel":
        height = mass / radius
        return cls(lambda u: height * np.maximum(0.0, 1.0 - np.abs(u) / radius),
                   l1_norm=abs(mass), radius=radius, label=f"triangular(R={radius}, mass={mass})")

    @classmethod
    def box(cls, radius: float = 1.0, mass: float = 1.0) -> "L1Kernel":
        height = mass / (2.0 * radius)
        return cls(lambda u: np.full(np.shape(u), height),
                   l1_norm=abs(mass), radius=radius, label=f"box(R={radius}, mass={mass})")

    @classmethod
    def gaussian(cls, sigma: float = 1.0, mass: float = 1.0, tail_tol: float = 1e-10) -> "L1Kernel":
        # mass * erfc(R / (sigma sqrt 2)) <= tail_tol
        radius = sigma * math.sqrt(2.0) * float(erfcinv(min(1.0, tail_tol / abs(mass))))
        norm = mass / (sigma * math.sqrt(2.0 * math.pi))
        return cls(lambda u: norm * np.exp(-0.5 * (np.asarray(u) / sigma) ** 2),
                   l1_norm=abs(mass), radius=max(radius, sigma), tail_tol=tail_tol,
                   label=f"gaussian(sigma={sigma}, mass={mass})")


def convolve_many(x: BoundedFunction, alpha: L1Kernel, ts, quad_tol: float) -> np.ndarray:
    """
    Convolution (x * alpha)(t) = int x(s) alpha(s - t) ds at many points

    Args:
        x: Bounded function
        alpha: Truncated kernel
        ts: Array of evaluation points
        quad_tol: Absolute quadrature tolerance per point

    Returns:
        numpy.ndarray: Convolution values, same shape as ts

    Raises:
        ToleranceError: If the tolerance is unreachable within the subdivision budget
    """
    ts = np.asarray(ts, dtype=float)
    flat = ts.ravel()
    out = np.empty(flat.size)
    R = alpha.radius

    for start in range(0, flat.size, CONVOLUTION_BLOCK):
        block = flat[start:start + CONVOLUTION_BLOCK]

        def sample(u, block=block):
            return evaluate(x, block[:, None] + u[None, :]) * alpha(u)[None, :]

        out[start:start + block.size] = integrate_uniform(sample, -R, R, quad_tol).value

    return out.reshape(ts.shape)


def convolve(x: BoundedFunction, alpha: L1Kernel, t: float, quad_tol: float) -> float:
    """
    Convolution (x * alpha)(t) = int_{t-R}^{t+R} x(s) alpha(s - t) ds at one point

    Args:
        x: Bounded function
        alpha: Truncated kernel
        t: Evaluation point
        quad_tol: Absolute quadrature tolerance

    Returns:
        float: Convolution value
    """
    return float(convolve_many(x, alpha, np.array([t]), quad_tol)[0])


def seminorm_01(x: BoundedFunction, quad_tol: float) -> float:
    """
    The seminorm ||x||_{0,1} = int_0^1 |x(s)| ds

    Args:
        x: Bounded function
        quad_tol: Absolute quadrature tolerance

    Returns:
        float: Seminorm value
    """
    return float(integrate_uniform(lambda s: np.abs(evaluate(x, s)), 0.0, 1.0, quad_tol).value)


def ergodic_mean(g: BoundedFunction, r: float, quad_tol: float) -> float:
    """
    Ergodic mean (1/2r) int_{-r}^{r} |g(t)| dt

    Args:
        g: Bounded function
        r: Half width of the averaging window (r > 0)
        quad_tol: Absolute tolerance on the mean

    Returns:
        float: Ergodic mean
    """
    if not r > 0:
        raise ArgumentError(f"Averaging half width must be positive, got {r}")
    initial = max(16, 2 * int(math.ceil(4.0 * r)))
    result = integrate_uniform(lambda t: np.abs(evaluate(g, t)), -r, r, quad_tol * 2.0 * r,
                               initial_intervals=initial)
    return float(result.value) / (2.0 * r)


def epsilon_period_search(f: BoundedFunction, eps: float, scan_lo: float, scan_hi: float,
                          scan_step: float, window: float, samples: int,
                          block: int = 256) -> Optional[float]:
    """
    Smallest scanned tau with max_t |f(t + tau) - f(t)| < eps over sampled t

    This is a sampled necessary condition for tau to be an eps-almost-period,
    not a proof of almost periodicity.

    Args:
        f: Function to inspect
        eps: Threshold (eps > 0)
        scan_lo: First candidate tau
        scan_hi: Last candidate tau (scan_hi > scan_lo)
        scan_step: Candidate spacing
        window: Samples t are taken uniformly in [-window, window]
        samples: Number of sampled t
        block: Number of candidates tested per vectorised batch

    Returns:
        Optional[float]: The smallest witness tau, or None when none is found
    """
    if not eps > 0 or not scan_lo < scan_hi or not window > 0 or scan_step <= 0 or samples < 2:
        raise ArgumentError("Invalid epsilon-period search parameters")

    ts = np.linspace(-window, window, samples)
    base = evaluate(f, ts)
    count = int(math.floor((scan_hi - scan_lo) / scan_step + 1e-9)) + 1
    candidates = scan_lo + scan_step * np.arange(count)

    for start in range(0, count, block):
        taus = candidates[start:start + block]
        shifted = evaluate(f, ts[None, :] + taus[:, None])
        defects = np.max(np.abs(shifted - base[None, :]), axis=1)
        hits = np.flatnonzero(defects < eps)
        if hits.size:
            tau = float(taus[hits[0]])
            logger.debug(f"eps-period witness tau={tau} (defect {defects[hits[0]]:.3e})")
            return tau

    return None


@dataclass(frozen=True)
class GridSpec:
    """A uniform output window: n nodes spanning [t0, t1]."""
    t0: float
    t1: float
    n: int

    def __post_init__(self):
        if not self.t0 < self.t1 or self.n < 2:
            raise ArgumentError(f"Invalid grid [{self.t0}, {self.t1}] with n={self.n}")

    @property
    def h(self) -> float:
        return (self.t1 - self.t0) / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n)

    def shifted(self, w: float) -> "GridSpec":
        return GridSpec(self.t0 + w, self.t1 + w, self.n)

    def reflected(self) -> "GridSpec":
        return GridSpec(-self.t1, -self.t0, self.n)

    def extended(self, left: float = 0.0, right: float = 0.0) -> "GridSpec":
        """Same step, window grown by whole steps covering at least left/right."""
        h = self.h
        n_left = int(math.ceil(left / h - 1e-9)) if left > 0 else 0
        n_right = int(math.ceil(right / h - 1e-9)) if right > 0 else 0
        return GridSpec(self.t0 - n_left * h, self.t1 + n_right * h, self.n + n_left + n_right)

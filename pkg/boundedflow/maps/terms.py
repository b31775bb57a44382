#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Map terms for boundedflow.
Leaves: time-only functions, pointwise superpositions, convolutions and the
[0, 1] integral seminorm. Combinators: sums, scalings, products, exponentials
and scalar compositions. Every term propagates an interval range and a Lipschitz
constant over an input box.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np

from ..common import ArgumentError
from ..function_core import BoundedFunction, L1Kernel, convolve_many, evaluate, interval_product, seminorm_01
from .base_term import BaseTerm, Box, EvaluationContext, points_key

# Setup logger
logger = logging.getLogger("terms")


def _sin_range(lo: float, hi: float) -> Box:
    if hi - lo >= 2.0 * math.pi:
        return -1.0, 1.0
    values = [math.sin(lo), math.sin(hi)]
    # Critical points pi/2 + j pi inside [lo, hi]
    j = math.ceil((lo - math.pi / 2.0) / math.pi)
    while math.pi / 2.0 + j * math.pi <= hi:
        values.append(1.0 if j % 2 == 0 else -1.0)
        j += 1
    return min(values), max(values)


def _cos_range(lo: float, hi: float) -> Box:
    return _sin_range(lo + math.pi / 2.0, hi + math.pi / 2.0)


@dataclass(frozen=True)
class ScalarPost:
    """A scalar function applied to x(t) or to a nonlocal scalar, with its Lipschitz constant."""
    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    image: Callable[[float, float], Box]


SCALAR_POSTS: Dict[str, ScalarPost] = {
    "identity": ScalarPost("identity", lambda v: np.asarray(v, dtype=float), 1.0, lambda lo, hi: (lo, hi)),
    "sin": ScalarPost("sin", np.sin, 1.0, _sin_range),
    "cos": ScalarPost("cos", np.cos, 1.0, _cos_range),
    "tanh": ScalarPost("tanh", np.tanh, 1.0, lambda lo, hi: (math.tanh(lo), math.tanh(hi))),
    "abs": ScalarPost("abs", np.abs, 1.0,
                      lambda lo, hi: (0.0 if lo <= 0.0 <= hi else min(abs(lo), abs(hi)), max(abs(lo), abs(hi)))),
}


def get_post(name: str) -> ScalarPost:
    """
    Look up a scalar post function by name

    Raises:
        ArgumentError: If the name is unknown
    """
    if name not in SCALAR_POSTS:
        supported = ", ".join(SCALAR_POSTS.keys())
        raise ArgumentError(f"Unsupported post function: {name}. Supported: {supported}")
    return SCALAR_POSTS[name]


class TimeFunction:
    """A time-only function together with its JSON description."""

    def __init__(self, function: BoundedFunction, source: Optional[Dict[str, Any]] = None):
        self.function = function
        self.source = source

    def to_dict(self) -> Dict[str, Any]:
        if self.source is None:
            raise ArgumentError(f"Time function '{self.function.label}' has no JSON description")
        return dict(self.source)

    @property
    def value_range(self) -> Box:
        return self.function.value_range

    @property
    def sup(self) -> float:
        return self.function.sup_bound


UNIT_WEIGHT = TimeFunction(BoundedFunction.constant(1.0), {"kind": "constant", "value": 1.0})


class ConstTerm(BaseTerm):
    """m(x)(t) = h(t), independent of x."""

    kind = "const"

    def __init__(self, function: TimeFunction, **kwargs):
        super().__init__(**kwargs)
        self.function = function

    def evaluate(self, context: EvaluationContext, t: np.ndarray) -> np.ndarray:
        return evaluate(self.function.function, t)

    def value_range(self, box: Box) -> Box:
        return self.function.value_range

    def propagated_lipschitz(self, box: Box) -> float:
        return 0.0

    @property
    def pointwise_only(self) -> bool:
        return True

    def pointwise(self, v: np.ndarray, t: np.ndarray) -> np.ndarray:
        return np.broadcast_to(evaluate(self.function.function, t), np.broadcast(v, t).shape)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "function": self.function.to_dict(), **self._declared_entry()}


class PointwiseTerm(BaseTerm):
    """m(x)(t) = w(t) phi(x(t))."""

    kind = "pointwise"

    def __init__(self, post: str, weight: TimeFunction = UNIT_WEIGHT, **kwargs):
        super().__init__(**kwargs)
        self.post = get_post(post)
        self.weight = weight

    def evaluate(self, context: EvaluationContext, t: np.ndarray) -> np.ndarray:
        return self.pointwise(evaluate(context.x, t), t)

    def value_range(self, box: Box) -> Box:
        return interval_product(self.weight.value_range, self.post.image(*box))

    def propagated_lipschitz(self, box: Box) -> float:
        return self.weight.sup * self.post.lipschitz

    @property
    def pointwise_only(self) -> bool:
        return True

    def pointwise(self, v: np.ndarray, t: np.ndarray) -> np.ndarray:
        return evaluate(self.weight.function, t) * self.post.fn(v)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "post": self.post.name, "weight": self.weight.to_dict(),
                **self._declared_entry()}


class ConvolutionTerm(BaseTerm):
    """m(x)(t) = w(t) int phi(x(s)) alpha(s - t) ds."""

    kind = "convolution"

    def __init__(self, kernel: L1Kernel, kernel_source: Optional[Dict[str, Any]] = None,
                 post: str = "identity", weight: TimeFunction = UNIT_WEIGHT,
                 signed_mass: Optional[float] = None, **kwargs):
        """
        Initialize the term

        Args:
            kernel: Truncated kernel alpha
            kernel_source: JSON description of the kernel
            post: Name of the scalar function applied to x before convolving
            weight: Time weight w
            signed_mass: Integral of alpha when alpha has one sign; narrows the range
            **kwargs: Declared constants
        """
        super().__init__(**kwargs)
        self.kernel = kernel
        self.kernel_source = kernel_source
        self.post = get_post(post)
        self.weight = weight
        self.signed_mass = signed_mass

    def _integrand(self, context: EvaluationContext) -> BoundedFunction:
        lo, hi = self.post.image(*context.x.value_range)
        return BoundedFunction(
            evaluator=lambda s, x=context.x, fn=self.post.fn: fn(evaluate(x, s)),
            sup_bound=max(abs(lo), abs(hi)),
            kind="composite",
            label=f"{self.post.name}(x)",
        )

    def evaluate(self, context: EvaluationContext, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        conv = context.cached(
            (id(self), points_key(t)),
            lambda: convolve_many(self._integrand(context), self.kernel, t, context.quad_tol),
        )
        return evaluate(self.weight.function, t) * conv

    def value_range(self, box: Box) -> Box:
        lo, hi = self.post.image(*box)
        if self.signed_mass is not None:
            inner = tuple(sorted((self.signed_mass * lo, self.signed_mass * hi)))
        else:
            inner = interval_product((lo, hi), (-self.kernel.l1_norm, self.kernel.l1_norm))
        return interval_product(self.weight.value_range, inner)

    def propagated_lipschitz(self, box: Box) -> float:
        return self.weight.sup * self.post.lipschitz * self.kernel.l1_norm

    @property
    def pointwise_only(self) -> bool:
        return False

    def to_dict(self) -> Dict[str, Any]:
        if self.kernel_source is None:
            raise ArgumentError(f"Kernel '{self.kernel.label}' has no JSON description")
        return {"kind": self.kind, "kernel": dict(self.kernel_source), "post": self.post.name,
                "weight": self.weight.to_dict(), **self._declared_entry()}


class Seminorm01Term(BaseTerm):
    """m(x)(t) = phi(int_0^1 |x(s)| ds), constant in t."""

    kind = "seminorm01"

    def __init__(self, post: str = "identity", **kwargs):
        super().__init__(**kwargs)
        self.post = get_post(post)

    def evaluate(self, context: EvaluationContext, t: np.ndarray) -> np.ndarray:
        value = context.cached(id(self), lambda: seminorm_01(context.x, context.quad_tol))
        return np.full(np.shape(t), float(self.post.fn(value)))

    def value_range(self, box: Box) -> Box:
        k, M = box
        lo = 0.0 if k <= 0.0 <= M else min(abs(k), abs(M))
        return self.post.image(lo, max(abs(k), abs(M)))

    def propagated_lipschitz(self, box: Box) -> float:
        return self.post.lipschitz

    @property
    def pointwise_only(self) -> bool:
        return False

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "post": self.post.name, **self._declared_entry()}


class SumTerm(BaseTerm):
    """Sum of terms."""

    kind = "sum"

    def __init__(self, terms: Sequence[BaseTerm], **kwargs):
        super().__init__(**kwargs)
        if not terms:
            raise ArgumentError("A sum needs at least one term")
        self.terms = tuple(terms)

    def children(self):
        return self.terms

    def evaluate(self, context: EvaluationContext, t: np.ndarray) -> np.ndarray:
        return sum(term.evaluate(context, t) for term in self.terms)

    def value_range(self, box: Box) -> Box:
        ranges = [term.value_range(box) for term in self.terms]
        return sum(lo for lo, _ in ranges), sum(hi for _, hi in ranges)

    def propagated_lipschitz(self, box: Box) -> float:
        return sum(term.lipschitz(box) for term in self.terms)

    def pointwise(self, v: np.ndarray, t: np.ndarray) -> np.ndarray:
        return sum(term.pointwise(v, t) for term in self.terms)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "terms": [term.to_dict() for term in self.terms], **self._declared_entry()}


class ScaleTerm(BaseTerm):
    """c times a term."""

    kind = "scale"

    def __init__(self, c: float, term: BaseTerm, **kwargs):
        super().__init__(**kwargs)
        self.c = float(c)
        self.term = term

    def children(self):
        return (self.term,)

    def evaluate(self, context: EvaluationContext, t: np.ndarray) -> np.ndarray:
        return self.c * self.term.evaluate(context, t)

    def value_range(self, box: Box) -> Box:
        lo, hi = self.term.value_range(box)
        return min(self.c * lo, self.c * hi), max(self.c * lo, self.c * hi)

    def propagated_lipschitz(self, box: Box) -> float:
        return abs(self.c) * self.term.lipschitz(box)

    def pointwise(self, v: np.ndarray, t: np.ndarray) -> np.ndarray:
        return self.c * self.term.pointwise(v, t)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "c": self.c, "term": self.term.to_dict(), **self._declared_entry()}


class ProductTerm(BaseTerm):
    """Product of two terms; L(ab) <= sup|a| L(b) + sup|b| L(a)."""

    kind = "product"

    def __init__(self, left: BaseTerm, right: BaseTerm, **kwargs):
        super().__init__(**kwargs)
        self.left = left
        self.right = right

    def children(self):
        return self.left, self.right

    def evaluate(self, context: EvaluationContext, t: np.ndarray) -> np.ndarray:
        return self.left.evaluate(context, t) * self.right.evaluate(context, t)

    def value_range(self, box: Box) -> Box:
        return interval_product(self.left.value_range(box), self.right.value_range(box))

    def propagated_lipschitz(self, box: Box) -> float:
        return (self.left.sup_bound(box) * self.right.lipschitz(box)
                + self.right.sup_bound(box) * self.left.lipschitz(box))

    def pointwise(self, v: np.ndarray, t: np.ndarray) -> np.ndarray:
        return self.left.pointwise(v, t) * self.right.pointwise(v, t)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "factors": [self.left.to_dict(), self.right.to_dict()],
                **self._declared_entry()}


class ExpTerm(BaseTerm):
    """exp of a term; L(exp a) <= exp(sup a) L(a)."""

    kind = "exp"

    def __init__(self, term: BaseTerm, **kwargs):
        super().__init__(**kwargs)
        self.term = term

    def children(self):
        return (self.term,)

    def evaluate(self, context: EvaluationContext, t: np.ndarray) -> np.ndarray:
        return np.exp(self.term.evaluate(context, t))

    def value_range(self, box: Box) -> Box:
        lo, hi = self.term.value_range(box)
        return math.exp(lo), math.exp(hi)

    def propagated_lipschitz(self, box: Box) -> float:
        return math.exp(self.term.value_range(box)[1]) * self.term.lipschitz(box)

    def pointwise(self, v: np.ndarray, t: np.ndarray) -> np.ndarray:
        return np.exp(self.term.pointwise(v, t))

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "term": self.term.to_dict(), **self._declared_entry()}


class ComposeTerm(BaseTerm):
    """phi applied to the values of a term, phi(m(x)(t))."""

    kind = "compose"

    def __init__(self, post: str, term: BaseTerm, **kwargs):
        super().__init__(**kwargs)
        self.post = get_post(post)
        self.term = term

    def children(self):
        return (self.term,)

    def evaluate(self, context: EvaluationContext, t: np.ndarray) -> np.ndarray:
        return self.post.fn(self.term.evaluate(context, t))

    def value_range(self, box: Box) -> Box:
        return self.post.image(*self.term.value_range(box))

    def propagated_lipschitz(self, box: Box) -> float:
        return self.post.lipschitz * self.term.lipschitz(box)

    def pointwise(self, v: np.ndarray, t: np.ndarray) -> np.ndarray:
        return self.post.fn(self.term.pointwise(v, t))

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "post": self.post.name, "term": self.term.to_dict(), **self._declared_entry()}

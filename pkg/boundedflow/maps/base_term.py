#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Base map term for boundedflow.
This module defines the base class of the terms a map descriptor is built
from, and the per-argument evaluation context shared by a term tree.
"""

import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, Hashable, Iterator, Optional, Tuple

import numpy as np

from ..common import UnsupportedProblem
from ..function_core import BoundedFunction

# Setup logger
logger = logging.getLogger("base_term")

Box = Tuple[float, float]


class EvaluationContext:
    """
    State shared by one evaluation of a term tree at a fixed argument x.

    Nonlocal terms (convolutions, seminorms) store their values here, keyed
    by term and by the exact evaluation points, so repeated evaluation of the
    returned function does not repeat the quadrature. A context must be used
    from one thread at a time.
    """

    def __init__(self, x: BoundedFunction, quad_tol: float = 1e-10, cache: bool = True):
        """
        Initialize the context

        Args:
            x: Argument of the map
            quad_tol: Absolute tolerance of the nonlocal quadratures
            cache: Whether nonlocal values are memoised
        """
        self.x = x
        self.quad_tol = quad_tol
        self.cache_enabled = cache
        self._cache: Dict[Hashable, Any] = {}
        self.hits = 0

    def cached(self, key: Hashable, compute):
        """
        Return the memoised value for key, computing it on first use

        Args:
            key: Cache key
            compute: Zero-argument callable producing the value

        Returns:
            The cached or freshly computed value
        """
        if not self.cache_enabled:
            return compute()
        if key in self._cache:
            self.hits += 1
            return self._cache[key]
        value = compute()
        self._cache[key] = value
        return value


def points_key(t: np.ndarray) -> Tuple[Tuple[int, ...], bytes]:
    """Hashable identity of an array of evaluation points."""
    t = np.ascontiguousarray(t, dtype=float)
    return t.shape, t.tobytes()


class BaseTerm(ABC):
    """
    Abstract base class for map terms.
    Leaves and combinators both inherit from this class; a tree of terms is a
    map descriptor x -> m(x), a bounded function of t.
    """

    kind: str = ""

    def __init__(self, lipschitz: Optional[float] = None, **kwargs):
        """
        Initialize the term

        Args:
            lipschitz: Declared Lipschitz constant overriding the propagated one
            **kwargs: Additional term-specific parameters
        """
        self.declared_lipschitz = lipschitz
        self.additional_params = kwargs

    @abstractmethod
    def evaluate(self, context: EvaluationContext, t: np.ndarray) -> np.ndarray:
        """
        Evaluate m(x)(t) for the argument held by the context

        Args:
            context: Evaluation context carrying x
            t: Array of evaluation points

        Returns:
            numpy.ndarray: Values, same shape as t
        """
        pass

    @abstractmethod
    def value_range(self, box: Box) -> Box:
        """
        Interval containing m(x)(t) for every x with values in the box and every t

        Args:
            box: (k, M) bounds of the argument

        Returns:
            tuple: (lower, upper)
        """
        pass

    @abstractmethod
    def propagated_lipschitz(self, box: Box) -> float:
        """
        Lipschitz constant of x -> m(x), sup norm to sup norm, on the box

        Args:
            box: (k, M) bounds of the argument

        Returns:
            float: Upper bound of the Lipschitz constant
        """
        pass

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """
        Serialise the term as a tagged JSON object

        Returns:
            dict: JSON-ready description with a "kind" tag
        """
        pass

    def children(self) -> Tuple["BaseTerm", ...]:
        return ()

    def walk(self) -> Iterator["BaseTerm"]:
        """Depth-first iteration over the term and its descendants."""
        yield self
        for child in self.children():
            yield from child.walk()

    def lipschitz(self, box: Box) -> float:
        """
        Lipschitz constant on the box, the declared one when present

        Args:
            box: (k, M) bounds of the argument

        Returns:
            float: Lipschitz constant
        """
        if self.declared_lipschitz is not None:
            return float(self.declared_lipschitz)
        return self.propagated_lipschitz(box)

    def sup_bound(self, box: Box) -> float:
        lo, hi = self.value_range(box)
        return max(abs(lo), abs(hi))

    @property
    def pointwise_only(self) -> bool:
        """True when m(x)(t) depends on x only through x(t)."""
        return all(child.pointwise_only for child in self.children()) if self.children() else False

    def pointwise(self, v: np.ndarray, t: np.ndarray) -> np.ndarray:
        """
        Evaluate the term as a function of (x(t), t) for pointwise-only trees

        Args:
            v: Values of the argument at t (broadcastable against t)
            t: Evaluation points

        Returns:
            numpy.ndarray: Term values

        Raises:
            UnsupportedProblem: If the term depends on x beyond x(t)
        """
        raise UnsupportedProblem(f"Term '{self.kind}' is not a pointwise superposition")

    def _declared_entry(self) -> Dict[str, Any]:
        return {} if self.declared_lipschitz is None else {"lipschitz": self.declared_lipschitz}

    def get_term_info(self) -> Dict[str, Any]:
        """
        Get information about the term

        Returns:
            dict: Term information
        """
        return {
            "name": self.__class__.__name__,
            "kind": self.kind,
            "pointwise_only": self.pointwise_only,
            "declared_lipschitz": self.declared_lipschitz,
            "children": len(self.children()),
        }

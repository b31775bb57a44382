#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Term factory for boundedflow.
This module turns tagged JSON objects into map terms, time functions and
kernels, and back. Every object carries a "kind" tag; term kinds are looked
up in a registry that callers may extend.
"""

import logging
from typing import Any, Callable, Dict

from ..common import ConfigError
from ..function_core import BoundedFunction, L1Kernel, TrigTerm, decay, trig_polynomial
from .base_term import BaseTerm
from .terms import (ComposeTerm, ConstTerm, ConvolutionTerm, ExpTerm, PointwiseTerm, ProductTerm, ScaleTerm,
                    Seminorm01Term, SumTerm, TimeFunction, UNIT_WEIGHT)

# Setup logger
logger = logging.getLogger("term_factory")


def _require(data: Dict[str, Any], key: str, where: str) -> Any:
    if key not in data:
        raise ConfigError(f"Missing '{key}' in {where} description: {data}")
    return data[key]


def time_function_from_dict(data: Dict[str, Any]) -> TimeFunction:
    """
    Build a time-only function from its JSON description

    Supported kinds: "constant" {value}, "trig" {offset, terms: [{amp, freq,
    phase, fn}]}, "decay" {} for (1 + t^2)^-1.

    Args:
        data: JSON object

    Returns:
        TimeFunction: Function with its source description

    Raises:
        ConfigError: If the description is invalid
    """
    kind = str(_require(data, "kind", "time function")).lower().strip()
    try:
        if kind == "constant":
            function = BoundedFunction.constant(float(_require(data, "value", "constant")))
        elif kind == "trig":
            terms = [TrigTerm(float(term["amp"]), float(term["freq"]), float(term.get("phase", 0.0)),
                              str(term.get("fn", "sin"))) for term in data.get("terms", [])]
            function = trig_polynomial(float(data.get("offset", 0.0)), terms)
        elif kind == "decay":
            function = decay()
        else:
            raise ConfigError(f"Unsupported time function kind: {kind}")
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"Invalid time function description {data}: {e}")
    return TimeFunction(function, dict(data))


def kernel_from_dict(data: Dict[str, Any]) -> L1Kernel:
    """
    Build a truncated kernel from its JSON description

    Supported kinds: "triangular" {radius, mass}, "box" {radius, mass},
    "gaussian" {sigma, mass, tail_tol}.

    Raises:
        ConfigError: If the description is invalid
    """
    kind = str(_require(data, "kind", "kernel")).lower().strip()
    try:
        if kind == "triangular":
            return L1Kernel.triangular(float(data.get("radius", 1.0)), float(data.get("mass", 1.0)))
        if kind == "box":
            return L1Kernel.box(float(data.get("radius", 1.0)), float(data.get("mass", 1.0)))
        if kind == "gaussian":
            return L1Kernel.gaussian(float(data.get("sigma", 1.0)), float(data.get("mass", 1.0)),
                                     float(data.get("tail_tol", 1e-10)))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid kernel description {data}: {e}")
    raise ConfigError(f"Unsupported kernel kind: {kind}")


def _declared(data: Dict[str, Any]) -> Dict[str, Any]:
    return {"lipschitz": float(data["lipschitz"])} if data.get("lipschitz") is not None else {}


def _weight(data: Dict[str, Any]) -> TimeFunction:
    return time_function_from_dict(data["weight"]) if "weight" in data else UNIT_WEIGHT


def _const(data):
    return ConstTerm(time_function_from_dict(_require(data, "function", "const")), **_declared(data))


def _pointwise(data):
    return PointwiseTerm(str(data.get("post", "identity")), _weight(data), **_declared(data))


def _convolution(data):
    source = _require(data, "kernel", "convolution")
    kernel = kernel_from_dict(source)
    # All built-in kernel shapes are one-signed
    return ConvolutionTerm(kernel, dict(source), str(data.get("post", "identity")), _weight(data),
                           signed_mass=float(source.get("mass", 1.0)), **_declared(data))


def _seminorm(data):
    return Seminorm01Term(str(data.get("post", "identity")), **_declared(data))


def _sum(data):
    return SumTerm([descriptor_from_dict(item) for item in _require(data, "terms", "sum")], **_declared(data))


def _scale(data):
    return ScaleTerm(float(_require(data, "c", "scale")), descriptor_from_dict(_require(data, "term", "scale")),
                     **_declared(data))


def _product(data):
    factors = [descriptor_from_dict(item) for item in _require(data, "factors", "product")]
    if len(factors) < 2:
        raise ConfigError("A product needs at least two factors")
    term = factors[0]
    for factor in factors[1:-1]:
        term = ProductTerm(term, factor)
    return ProductTerm(term, factors[-1], **_declared(data))


def _exp(data):
    return ExpTerm(descriptor_from_dict(_require(data, "term", "exp")), **_declared(data))


def _compose(data):
    return ComposeTerm(str(_require(data, "post", "compose")), descriptor_from_dict(_require(data, "term", "compose")),
                       **_declared(data))


# Term registry
TERM_REGISTRY: Dict[str, Callable[[Dict[str, Any]], BaseTerm]] = {
    "const": _const,
    "pointwise": _pointwise,
    "convolution": _convolution,
    "seminorm01": _seminorm,
    "sum": _sum,
    "scale": _scale,
    "product": _product,
    "exp": _exp,
    "compose": _compose,
}


def descriptor_from_dict(data: Dict[str, Any]) -> BaseTerm:
    """
    Build a map descriptor from its JSON description

    Args:
        data: Tagged JSON object

    Returns:
        BaseTerm: Root of the term tree

    Raises:
        ConfigError: If the kind is not supported or the description is invalid
    """
    if not isinstance(data, dict):
        raise ConfigError(f"Map descriptor must be a JSON object, got {type(data).__name__}")

    # Normalize kind
    kind = str(_require(data, "kind", "term")).lower().strip()

    if kind not in TERM_REGISTRY:
        supported_kinds = ", ".join(TERM_REGISTRY.keys())
        raise ConfigError(f"Unsupported term kind: {kind}. Supported kinds: {supported_kinds}")

    try:
        return TERM_REGISTRY[kind](data)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"Invalid '{kind}' term: {e}")


def descriptor_to_dict(term: BaseTerm) -> Dict[str, Any]:
    """
    Serialise a map descriptor

    Args:
        term: Root of the term tree

    Returns:
        dict: Tagged JSON object accepted by descriptor_from_dict
    """
    return term.to_dict()


def register_term(kind: str, builder: Callable[[Dict[str, Any]], BaseTerm]) -> None:
    """
    Register a new term kind

    Args:
        kind: Tag used in JSON descriptions
        builder: Callable turning a JSON object into a term

    Raises:
        ValueError: If the kind is already registered
    """
    # Normalize kind
    kind = kind.lower().strip()

    # Check if kind is already registered
    if kind in TERM_REGISTRY:
        raise ValueError(f"Term kind already registered: {kind}")

    # Register term builder
    TERM_REGISTRY[kind] = builder
    logger.debug(f"Registered term kind: {kind}")


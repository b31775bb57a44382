#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Problem catalog for boundedflow.
This module holds the built-in problems as JSON descriptions and builds
Problem instances from them or from inline descriptions in a run config.

Built-in problems:
    c2pi   G = 4 + (1 + ||x||_{0,1})(1 + sin t), F = 2 + sin t + cos x(t); q = 3/4
    exatt  F = (2 + cos t + sin x(t) / (1 + t^2)) / 10,
           G = 4 + sin t + sin(sqrt(2) t) + cos x(t) / (1 + t^2); lambda = 1/2
    ex0    F = (sin t + sin(sqrt(2) t) + (x * alpha)(t) / (1 + t^2)) / 3,
           G = 3 + sin 2t + cos((x * beta)(t)) / (1 + t^2)
    ex1    G = exp(||x||_{0,1} + sin x(t) / (1 + t^2)),
           F = 3 + sin ||x||_{0,1} + cos x(t) / (1 + t^2)

where ||x||_{0,1} = int_0^1 |x(s)| ds and alpha, beta are triangular
kernels of radius 1 and unit mass.
"""

import copy
import logging
import math
from typing import Any, Dict

from ..common import ConfigError
from ..picard_solver import PLUS_G, Problem
from .hypotheses import HypothesisConstants
from .term_factory import descriptor_from_dict

# Setup logger
logger = logging.getLogger("catalog")

SQRT2 = math.sqrt(2.0)
DECAY = {"kind": "decay"}
UNIT_TRIANGLE = {"kind": "triangular", "radius": 1.0, "mass": 1.0}


def _trig(offset: float, *terms) -> Dict[str, Any]:
    return {"kind": "trig", "offset": offset,
            "terms": [{"amp": amp, "freq": freq, "phase": 0.0, "fn": fn} for amp, freq, fn in terms]}


def _const(function: Dict[str, Any]) -> Dict[str, Any]:
    return {"kind": "const", "function": function}


C2PI = {
    "name": "c2pi",
    "sign": PLUS_G,
    "G": {"kind": "sum", "terms": [
        _const({"kind": "constant", "value": 4.0}),
        {"kind": "product", "factors": [
            {"kind": "sum", "terms": [_const({"kind": "constant", "value": 1.0}),
                                      {"kind": "seminorm01", "post": "identity"}]},
            _const(_trig(1.0, (1.0, 1.0, "sin"))),
        ]},
    ]},
    "F": {"kind": "sum", "terms": [
        _const(_trig(2.0, (1.0, 1.0, "sin"))),
        {"kind": "pointwise", "post": "cos"},
    ]},
    # F/G = (3 + sin t)/(5 + sin t) at x = 0 exceeds 1/2; 2/3 bounds the ratio on the box
    "constants": {"l": 4.0, "k": 0.0, "M": 2.0 / 3.0, "r": 4.0, "L_F": 1.0, "L_G": 2.0},
}

EXATT = {
    "name": "exatt",
    "sign": PLUS_G,
    "F": {"kind": "scale", "c": 0.1, "term": {"kind": "sum", "terms": [
        _const(_trig(2.0, (1.0, 1.0, "cos"))),
        {"kind": "pointwise", "post": "sin", "weight": DECAY},
    ]}},
    "G": {"kind": "sum", "terms": [
        _const(_trig(4.0, (1.0, 1.0, "sin"), (1.0, SQRT2, "sin"))),
        {"kind": "pointwise", "post": "cos", "weight": DECAY},
    ]},
    "constants": {"l": 1.0, "k": 0.0, "M": 0.4, "r": 0.4, "L_F": 0.1, "L_G": 1.0},
}

EX0 = {
    "name": "ex0",
    "sign": PLUS_G,
    "F": {"kind": "scale", "c": 1.0 / 3.0, "term": {"kind": "sum", "terms": [
        _const(_trig(0.0, (1.0, 1.0, "sin"), (1.0, SQRT2, "sin"))),
        {"kind": "convolution", "kernel": UNIT_TRIANGLE, "post": "identity", "weight": DECAY},
    ]}},
    "G": {"kind": "sum", "terms": [
        _const(_trig(3.0, (1.0, 2.0, "sin"))),
        {"kind": "product", "factors": [
            _const(DECAY),
            {"kind": "compose", "post": "cos",
             "term": {"kind": "convolution", "kernel": UNIT_TRIANGLE, "post": "identity"}},
        ]},
    ]},
    # Box [-1/||alpha||_1, 1/||alpha||_1] with ||alpha||_1 = 1
    "constants": {"l": 1.0, "k": -1.0, "M": 1.0, "r": 1.0, "L_F": 1.0 / 3.0, "L_G": 1.0},
}

EX1 = {
    "name": "ex1",
    "sign": PLUS_G,
    "G": {"kind": "exp", "term": {"kind": "sum", "terms": [
        {"kind": "seminorm01", "post": "identity"},
        {"kind": "pointwise", "post": "sin", "weight": DECAY},
    ]}},
    "F": {"kind": "sum", "terms": [
        _const({"kind": "constant", "value": 3.0}),
        {"kind": "seminorm01", "post": "sin"},
        {"kind": "pointwise", "post": "cos", "weight": DECAY},
    ]},
    # G >= 1/e and |F| <= 5 give the box [0, 5e]; the midpoint would make G ~ e^7
    "constants": {"l": math.exp(-1.0), "k": 0.0, "M": 5.0 * math.e, "r": 5.0, "L_F": 2.0,
                  "L_G": 2.0 * math.exp(5.0 * math.e + 1.0)},
    "initial_value": 1.0,
}

# Problem registry
PROBLEM_REGISTRY: Dict[str, Dict[str, Any]] = {
    "c2pi": C2PI,
    "exatt": EXATT,
    "ex0": EX0,
    "ex1": EX1,
}


def problem_from_dict(data: Dict[str, Any]) -> Problem:
    """
    Build a problem from its JSON description

    Args:
        data: Object with "F", "G", "constants" and optional "sign", "name", "initial_value"

    Returns:
        Problem: The problem

    Raises:
        ConfigError: If the description is invalid
    """
    try:
        constants = HypothesisConstants.from_dict(data["constants"])
        return Problem(
            F=descriptor_from_dict(data["F"]),
            G=descriptor_from_dict(data["G"]),
            constants=constants,
            sign=data.get("sign", PLUS_G),
            name=data.get("name", "custom"),
            initial_value=data.get("initial_value"),
        )
    except KeyError as e:
        raise ConfigError(f"Problem description is missing {e}")
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"Invalid problem description: {e}")


def get_problem(problem_id: str, **overrides) -> Problem:
    """
    Get a built-in problem

    Args:
        problem_id: Problem id (e.g., "c2pi", "exatt")
        **overrides: Replacement declared constants (l, k, M, r, L_F, L_G)

    Returns:
        Problem: Problem instance

    Raises:
        ConfigError: If the problem is not registered
    """
    # Normalize problem id
    problem_id = problem_id.lower().strip()

    if problem_id not in PROBLEM_REGISTRY:
        supported_problems = ", ".join(PROBLEM_REGISTRY.keys())
        raise ConfigError(f"Unsupported problem: {problem_id}. Supported problems: {supported_problems}")

    data = copy.deepcopy(PROBLEM_REGISTRY[problem_id])
    unknown = set(overrides) - set(data["constants"])
    if unknown:
        raise ConfigError(f"Unknown constant override(s): {', '.join(sorted(unknown))}")
    data["constants"].update({key: float(value) for key, value in overrides.items()})

    logger.debug(f"Building problem {problem_id}")
    return problem_from_dict(data)


def register_problem(problem_id: str, data: Dict[str, Any]) -> None:
    """
    Register a new problem

    Args:
        problem_id: Problem id
        data: JSON description accepted by problem_from_dict

    Raises:
        ValueError: If the problem id is already registered
    """
    # Normalize problem id
    problem_id = problem_id.lower().strip()

    # Check if problem is already registered
    if problem_id in PROBLEM_REGISTRY:
        raise ValueError(f"Problem already registered: {problem_id}")

    # Validate before registering
    problem_from_dict(data)
    PROBLEM_REGISTRY[problem_id] = copy.deepcopy(data)
    logger.debug(f"Registered problem: {problem_id}")

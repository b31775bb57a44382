import math

import numpy as np
import pytest

from boundedflow.common import ConfigError
from boundedflow.function_core import BoundedFunction
from boundedflow.maps.catalog import PROBLEM_REGISTRY, get_problem, problem_from_dict, register_problem
from boundedflow.maps.hypotheses import apply_map
from boundedflow.picard_solver import MINUS_G, PLUS_G


@pytest.mark.parametrize("problem_id", sorted(PROBLEM_REGISTRY))
def test_builtin_problems_build(problem_id):
    p = get_problem(problem_id)
    assert p.name == problem_id
    assert p.sign == PLUS_G
    lo, hi = p.box
    assert lo <= p.starting_value() <= hi


def test_pointwise_flags():
    assert get_problem("exatt").pointwise_only
    assert not get_problem("c2pi").pointwise_only
    assert not get_problem("ex0").pointwise_only


def test_ex0_rate_at_zero():
    p = get_problem("ex0")
    t = np.linspace(-4.0, 4.0, 17)
    g = apply_map(p.G, BoundedFunction.constant(0.0), p.box)
    assert np.allclose(g(t), 3.0 + np.sin(2.0 * t) + 1.0 / (1.0 + t ** 2), atol=1e-9)


def test_ex1_constants():
    c = get_problem("ex1").constants
    assert c.l == pytest.approx(math.exp(-1.0))
    assert c.M == pytest.approx(5.0 * math.e)
    assert c.q > 1.0
    assert get_problem("ex1").starting_value() == 1.0


def test_constant_overrides():
    p = get_problem("C2PI ", L_G=5)
    assert p.constants.L_G == 5.0
    assert PROBLEM_REGISTRY["c2pi"]["constants"]["L_G"] == 2.0


def test_unknown_problem_and_constant():
    with pytest.raises(ConfigError):
        get_problem("ex9")
    with pytest.raises(ConfigError):
        get_problem("c2pi", gamma=1.0)


def test_problem_description_errors():
    data = {"F": {"kind": "seminorm01"}, "G": {"kind": "const", "function": {"kind": "constant", "value": 1.0}}}
    with pytest.raises(ConfigError):
        problem_from_dict(data)
    data["constants"] = {"l": 1.0, "k": 0.0, "M": 1.0, "r": 1.0, "L_F": 1.0, "L_G": 0.0}
    with pytest.raises(ConfigError):
        problem_from_dict({**data, "sign": "sideways"})
    with pytest.raises(ConfigError):
        problem_from_dict({**data, "initial_value": 3.0})
    p = problem_from_dict({**data, "sign": MINUS_G})
    assert p.box == (-1.0, 0.0)


def test_problem_json_round_trip():
    p = get_problem("exatt")
    again = problem_from_dict(p.to_dict())
    assert again.to_dict() == p.to_dict()


def test_register_problem():
    data = {
        "name": "flat",
        "F": {"kind": "const", "function": {"kind": "constant", "value": 1.0}},
        "G": {"kind": "const", "function": {"kind": "constant", "value": 2.0}},
        "constants": {"l": 2.0, "k": 0.0, "M": 1.0, "r": 1.0, "L_F": 0.0, "L_G": 0.0},
    }
    register_problem("Flat", data)
    try:
        assert get_problem("flat").constants.l == 2.0
        with pytest.raises(ValueError):
            register_problem("flat", data)
    finally:
        PROBLEM_REGISTRY.pop("flat")
    with pytest.raises(ConfigError):
        register_problem("broken", {"F": {}})
    assert "broken" not in PROBLEM_REGISTRY

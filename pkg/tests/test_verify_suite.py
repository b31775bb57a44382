import inspect

import numpy as np
import pytest

from boundedflow.verify_suite import (VERIFY_CHECKS, CheckResult, VerifyContext, check_lipschitz_pairs,
                                      run_verify_suite, unit_mass_corpus)


@pytest.fixture(scope="module")
def ctx():
    return VerifyContext()


@pytest.mark.parametrize("name", [name for name in VERIFY_CHECKS if name != "lipschitz_bound"])
def test_check_passes(ctx, name):
    result = VERIFY_CHECKS[name](ctx)
    assert result.name == name
    assert result.passed, result.to_dict()


def test_lipschitz_pairs(ctx):
    result = check_lipschitz_pairs(ctx, pairs=6)
    assert result.passed
    assert result.details == {"pairs": 6, "failures": 0}
    assert result.measured <= 1.0


def test_corpus_rates_respect_their_lower_bounds():
    t = np.linspace(-20.0, 20.0, 2001)
    for g, l in unit_mass_corpus().values():
        assert g(t).min() >= l


def test_suite_runs_selected_checks_in_order(ctx):
    results = run_verify_suite(ctx, ["reverse_oracle", "forward_oracle"], max_workers=2)
    assert [result.name for result in results] == ["reverse_oracle", "forward_oracle"]
    assert all(isinstance(result, CheckResult) for result in results)


def test_unknown_check(ctx):
    with pytest.raises(KeyError):
        run_verify_suite(ctx, ["forward_oracle", "telepathy"])


def test_result_serialisation():
    data = CheckResult("x", 1e-9, 1e-6, True).to_dict()
    assert data == {"name": "x", "measured": 1e-9, "threshold": 1e-6, "pass": True, "details": {}}


def test_lipschitz_check_defaults_to_two_hundred_pairs():
    assert inspect.signature(check_lipschitz_pairs).parameters["pairs"].default == 200


@pytest.mark.slow
def test_default_lipschitz_check_runs_every_pair(ctx):
    result = VERIFY_CHECKS["lipschitz_bound"](ctx)
    assert result.details == {"pairs": 200, "failures": 0}
    assert result.passed
    assert result.measured <= 1.0 + 1e-3

import logging

import pytest
from hypothesis import given
from hypothesis import strategies as st
from rich.logging import RichHandler

from boundedflow.common import (ArgumentError, BoundedFlowError, ConditionViolation, ConfigError,
                                EvaluationError, HypothesisViolation, PreconditionViolation, ToleranceError,
                                UnsupportedProblem, ensure_directory, parallel_map, read_config, setup_logging)


def test_errors_carry_their_context():
    assert EvaluationError("bad value", 1.5).t == 1.5
    assert "t=1.5" in str(EvaluationError("bad value", 1.5))
    assert ToleranceError("no luck", 3e-4).achieved == 3e-4
    assert ConditionViolation("fails", -0.25).rate == -0.25
    assert PreconditionViolation("g < l", -2.0).t == -2.0


@pytest.mark.parametrize("error", [EvaluationError, ToleranceError, PreconditionViolation,
                                   HypothesisViolation, ConditionViolation, UnsupportedProblem])
def test_library_errors_share_a_root(error):
    assert issubclass(error, BoundedFlowError)


def test_argument_and_config_errors_are_value_errors():
    assert issubclass(ArgumentError, ValueError)
    assert issubclass(ConfigError, ValueError)


@given(st.lists(st.integers(-1000, 1000), max_size=40), st.sampled_from([None, 1, 4]))
def test_parallel_map_keeps_input_order(items, workers):
    assert parallel_map(lambda v: 3 * v, items, workers) == [3 * v for v in items]


def test_read_config_rejects_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_config(path)


def test_read_config_rejects_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        read_config(tmp_path / "absent.json")


def test_ensure_directory_creates_parents(tmp_path):
    target = ensure_directory(tmp_path / "a" / "b")
    assert target.is_dir()


def test_setup_logging_installs_rich_handler_on_root():
    logger = setup_logging("boundedflow-test", logging.DEBUG)
    root = logging.getLogger()
    assert logger.name == "boundedflow-test"
    assert root.level == logging.DEBUG
    assert any(isinstance(handler, RichHandler) for handler in root.handlers)

import logging

import pytest

from boundedflow.exp_kernel_operator import Tolerances
from boundedflow.function_core import GridSpec


@pytest.fixture
def tolerances():
    return Tolerances(tail_tol=1e-9, quad_tol=1e-9)


@pytest.fixture
def small_grid():
    return GridSpec(-5.0, 5.0, 201)


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    monkeypatch.delenv("BOUNDEDFLOW_THREADS", raising=False)
    monkeypatch.delenv("BOUNDEDFLOW_LOG_LEVEL", raising=False)


@pytest.fixture(autouse=True)
def restore_root_logger():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)

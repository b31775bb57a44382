#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Common utilities for boundedflow.
This module contains shared functionality used across the library and the
command-line front end: logging setup, the exception hierarchy and a small
order-preserving parallel map.
"""

import json
import os
import logging
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from pathlib import Path
from typing import Callable, Iterable, List, Optional, TypeVar

from rich.logging import RichHandler

# Setup global logger
logger = logging.getLogger("boundedflow")

T = TypeVar("T")
R = TypeVar("R")


class BoundedFlowError(RuntimeError):
    """Base class of every error raised by boundedflow."""


class EvaluationError(BoundedFlowError):
    """A function produced a non-finite value."""

    def __init__(self, message: str, t: Optional[float] = None):
        super().__init__(message if t is None else f"{message} (at t={t!r})")
        self.t = t


class ToleranceError(BoundedFlowError):
    """A quadrature tolerance could not be reached within the subdivision budget."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error estimate {achieved:.3e})")
        self.achieved = achieved


class PreconditionViolation(BoundedFlowError):
    """A sampled precondition (typically g >= l) does not hold."""

    def __init__(self, message: str, t: Optional[float] = None):
        super().__init__(message if t is None else f"{message} (at t={t!r})")
        self.t = t


class HypothesisViolation(BoundedFlowError):
    """A hypothesis on F and G failed on a probed point."""


class ConditionViolation(BoundedFlowError):
    """The attractivity condition l > L_G max(M, -k) + L_F does not hold."""

    def __init__(self, message: str, rate: float):
        super().__init__(f"{message} (lambda={rate!r})")
        self.rate = rate


class UnsupportedProblem(BoundedFlowError):
    """The problem uses map terms the requested pipeline cannot handle."""


class ArgumentError(ValueError):
    """Invalid argument combination passed to a library routine."""


class ConfigError(ValueError):
    """Invalid run configuration."""


def setup_logging(script_name, log_level=logging.INFO, log_to_file=False):
    """
    Setup standardized logging for the library and its command-line front end

    Args:
        script_name: Name of the logger (also used for the log file name)
        log_level: Logging level (default: INFO)
        log_to_file: Whether to also log to a dated file under logs/ (default: False)

    Handlers go on the root logger so the per-module loggers share them.

    Returns:
        logger: Configured logger
    """
    root = logging.getLogger()
    root.setLevel(log_level)

    # Clear existing handlers
    root.handlers.clear()

    # Console handler
    console_handler = RichHandler(show_path=False, rich_tracebacks=False)
    console_handler.setFormatter(logging.Formatter('%(name)s - %(message)s'))
    root.addHandler(console_handler)

    # File handler (optional)
    if log_to_file:
        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )
        log_dir = ensure_directory("logs")
        log_file = log_dir / f"{script_name}_{datetime.now().strftime('%Y%m%d')}.log"
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)

    return logging.getLogger(script_name)


def read_config(config_path):
    """
    Read configuration file and return its contents

    Args:
        config_path: Path to the configuration file

    Returns:
        dict: Configuration data

    Raises:
        ConfigError: If the configuration file cannot be read
    """
    try:
        with open(config_path, 'r', encoding='utf-8') as file:
            return json.load(file)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Error reading configuration file {config_path}: {e}")
        raise ConfigError(f"Error reading configuration file {config_path}: {e}")


def get_project_root():
    """
    Get project root directory

    Returns:
        Path: Project root directory
    """
    return Path(os.path.dirname(os.path.abspath(__file__))).parent


def ensure_directory(directory_path):
    """
    Ensure that a directory exists, creating it if necessary

    Args:
        directory_path: Path to the directory

    Returns:
        Path: Path to the directory
    """
    directory = Path(directory_path)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def parallel_map(func: Callable[[T], R], items: Iterable[T],
                 max_workers: Optional[int] = None) -> List[R]:
    """
    Apply a function to every item, optionally on a thread pool

    Results come back in input order whatever the worker count, so callers
    stay deterministic.

    Args:
        func: Function to apply
        items: Items to process
        max_workers: Worker cap (None or 1 runs sequentially)

    Returns:
        list: Results in input order
    """
    items = list(items)
    if not max_workers or max_workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        return list(executor.map(func, items))


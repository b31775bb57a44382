#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
File utilities for boundedflow.
This module writes the run outputs. Every write goes to a temporary file in
the target directory first and is then renamed over the target, so a killed
run never leaves a half-written report behind.
"""

import csv
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Sequence, Union

import numpy as np

from ..common import ensure_directory

# Setup logger
logger = logging.getLogger("file_utils")

# Shortest repr that round-trips a double
FLOAT_FORMAT = ".17g"


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {value.__class__.__name__} is not JSON serializable")


def _atomic_write(file_path: Path, write) -> Path:
    ensure_directory(file_path.parent)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{file_path.name}.", suffix=".tmp", dir=file_path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            write(f)
        os.replace(tmp_name, file_path)
    except Exception:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return file_path


def save_json(data: Any, file_path: Union[str, Path], indent: int = 2) -> Path:
    """
    Save data to a JSON file atomically

    Args:
        data: Data to save (numpy scalars and arrays are converted)
        file_path: Path to the file
        indent: JSON indentation (default: 2)

    Returns:
        Path: Path to the saved file
    """
    file_path = Path(file_path)
    try:
        _atomic_write(file_path, lambda f: json.dump(data, f, indent=indent, ensure_ascii=False,
                                                     default=_json_default))
        logger.debug(f"Saved JSON data to {file_path}")
        return file_path
    except Exception as e:
        logger.error(f"Error saving JSON file {file_path}: {e}")
        raise


def load_json(file_path: Union[str, Path]) -> Dict[str, Any]:
    """
    Load data from a JSON file

    Args:
        file_path: Path to the file

    Returns:
        dict: Loaded data

    Raises:
        FileNotFoundError: If the file doesn't exist
        json.JSONDecodeError: If the file contains invalid JSON
    """
    file_path = Path(file_path)
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            data = json.load(f)
        logger.debug(f"Loaded JSON data from {file_path}")
        return data
    except FileNotFoundError:
        logger.error(f"JSON file not found: {file_path}")
        raise
    except json.JSONDecodeError as e:
        logger.error(f"Invalid JSON in file {file_path}: {e}")
        raise


def save_csv(header: Sequence[str], columns: Iterable[Sequence[float]], file_path: Union[str, Path]) -> Path:
    """
    Save equally long numeric columns to a CSV file atomically

    Values are written with 17 significant digits.

    Args:
        header: Column names
        columns: One sequence of values per column
        file_path: Path to the file

    Returns:
        Path: Path to the saved file

    Raises:
        ValueError: If the column count or lengths disagree
    """
    file_path = Path(file_path)
    columns = [np.asarray(column, dtype=float) for column in columns]
    if len(columns) != len(header):
        raise ValueError(f"{len(header)} column name(s) for {len(columns)} column(s)")
    if len({column.shape[0] for column in columns}) > 1:
        raise ValueError("CSV columns must have equal lengths")

    def write(f):
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([format(float(value), FLOAT_FORMAT) for value in row])

    try:
        _atomic_write(file_path, write)
        logger.debug(f"Saved CSV data to {file_path}")
        return file_path
    except Exception as e:
        logger.error(f"Error saving CSV file {file_path}: {e}")
        raise


def load_csv(file_path: Union[str, Path]) -> Dict[str, np.ndarray]:
    """
    Load a numeric CSV file written by save_csv

    Returns:
        dict: Column name -> values
    """
    with open(file_path, "r", encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    header, body = rows[0], rows[1:]
    values = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: values[:, i] for i, name in enumerate(header)}

#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Configuration manager for boundedflow.
This module builds the run configuration from three layers, later ones
winning: the JSON config file, environment variables (a .env file is
honoured) and command-line overrides.
"""

import copy
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

from dotenv import load_dotenv

from ..common import ConfigError, get_project_root, read_config

# Setup logger
logger = logging.getLogger("config_manager")

ENV_THREADS = "BOUNDEDFLOW_THREADS"
ENV_LOG_LEVEL = "BOUNDEDFLOW_LOG_LEVEL"

MIN_GRID_NODES = 9


@dataclass
class GridConfig:
    t0: float = -20.0
    t1: float = 20.0
    n: int = 4001


@dataclass
class ToleranceConfig:
    tail_tol: float = 1e-9
    quad_tol: float = 1e-9
    step_tol: float = 1e-8
    residual_tol: float = 1e-4
    slack: float = 0.05


@dataclass
class SolverConfig:
    max_iter: int = 200
    damping: float = 1.0


@dataclass
class AttractConfig:
    perturbations: List[float] = field(default_factory=lambda: [0.1, -0.1, 0.3])
    horizon: float = 20.0
    h: float = 1e-3
    t_start: float = 0.0


@dataclass
class EstimatorConfig:
    t_window: List[float] = field(default_factory=lambda: [-20.0, 20.0])
    n_samples: int = 401
    n_probes: int = 24
    n_pairs: int = 24


@dataclass
class LoggingConfig:
    level: str = "INFO"
    log_to_file: bool = False


@dataclass
class RunConfig:
    """
    Complete configuration of one CLI run.

    `problem` is either a built-in problem id or an inline problem
    description with "F", "G" and "constants"; `constants` replaces declared
    constants of a built-in problem.
    """
    problem: Union[str, Dict[str, Any]] = "c2pi"
    constants: Dict[str, float] = field(default_factory=dict)
    grid: GridConfig = field(default_factory=GridConfig)
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    attract: AttractConfig = field(default_factory=AttractConfig)
    estimators: EstimatorConfig = field(default_factory=EstimatorConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    output_dir: str = "./output"
    seed: int = 0
    threads: Optional[int] = None

    def validate(self) -> "RunConfig":
        """
        Check the invariants of a run configuration

        Returns:
            RunConfig: self

        Raises:
            ConfigError: If an invariant fails
        """
        g, tol = self.grid, self.tolerances
        if not g.t0 < g.t1:
            raise ConfigError(f"grid.t0 must be below grid.t1, got [{g.t0}, {g.t1}]")
        if g.n < MIN_GRID_NODES:
            raise ConfigError(f"grid.n must be at least {MIN_GRID_NODES}, got {g.n}")
        for name, value in asdict(tol).items():
            if not value > 0:
                raise ConfigError(f"tolerances.{name} must be positive, got {value}")
        if not 0.0 < self.solver.damping <= 1.0:
            raise ConfigError(f"solver.damping must lie in (0, 1], got {self.solver.damping}")
        if self.solver.max_iter < 1:
            raise ConfigError(f"solver.max_iter must be positive, got {self.solver.max_iter}")
        if not self.attract.horizon > 0 or not self.attract.h > 0:
            raise ConfigError("attract.horizon and attract.h must be positive")
        window = self.estimators.t_window
        if len(window) != 2 or not window[0] < window[1]:
            raise ConfigError(f"estimators.t_window must be [lo, hi] with lo < hi, got {window}")
        if self.estimators.n_samples < 2 or self.estimators.n_probes < 1 or self.estimators.n_pairs < 2:
            raise ConfigError("estimators need n_samples >= 2, n_probes >= 1 and n_pairs >= 2")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"threads must be positive, got {self.threads}")
        if not isinstance(self.problem, (str, dict)):
            raise ConfigError("problem must be an id or an inline description")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """
        Build a configuration from its JSON form; missing keys take defaults

        Raises:
            ConfigError: On unknown keys or wrongly typed values
        """
        sections = {
            "grid": GridConfig,
            "tolerances": ToleranceConfig,
            "solver": SolverConfig,
            "attract": AttractConfig,
            "estimators": EstimatorConfig,
            "logging": LoggingConfig,
        }
        kwargs: Dict[str, Any] = {}
        try:
            for key, value in data.items():
                if key in sections:
                    kwargs[key] = sections[key](**(value or {}))
                elif key == "paths":
                    kwargs["output_dir"] = str((value or {}).get("output_dir", "./output"))
                elif key in ("problem", "constants", "output_dir", "seed", "threads"):
                    kwargs[key] = value
                else:
                    raise ConfigError(f"Unknown configuration key: {key}")
        except TypeError as e:
            raise ConfigError(f"Invalid configuration section: {e}")
        return cls(**kwargs)


def _float_list(text: str) -> List[float]:
    text = text.strip().strip("[]")
    return [float(item) for item in text.split(",") if item.strip()]


def _bool(text: str) -> bool:
    return str(text).strip().lower() in ("1", "true", "yes", "on")


# Command-line override name -> (section, key, parser)
OVERRIDE_FIELDS: Dict[str, Tuple[Optional[str], str, Callable[[str], Any]]] = {
    "grid.t0": ("grid", "t0", float),
    "grid.t1": ("grid", "t1", float),
    "grid.n": ("grid", "n", int),
    "tol.tail": ("tolerances", "tail_tol", float),
    "tol.quad": ("tolerances", "quad_tol", float),
    "tol.step": ("tolerances", "step_tol", float),
    "tol.residual": ("tolerances", "residual_tol", float),
    "tol.slack": ("tolerances", "slack", float),
    "solver.max-iter": ("solver", "max_iter", int),
    "solver.damping": ("solver", "damping", float),
    "attract.horizon": ("attract", "horizon", float),
    "attract.h": ("attract", "h", float),
    "attract.t-start": ("attract", "t_start", float),
    "attract.perturbations": ("attract", "perturbations", _float_list),
    "estimators.samples": ("estimators", "n_samples", int),
    "estimators.probes": ("estimators", "n_probes", int),
    "estimators.pairs": ("estimators", "n_pairs", int),
    "log.level": ("logging", "level", str),
    "log.file": ("logging", "log_to_file", _bool),
}


class ConfigManager:
    """
    Configuration manager for boundedflow runs.
    Loads the config file once and produces validated RunConfig objects.
    """

    def __init__(self, config_path: Optional[Union[str, Path]] = None, env_file: Optional[Union[str, Path]] = None):
        """
        Initialize the configuration manager

        Args:
            config_path: Path to the JSON configuration file (None: defaults only)
            env_file: Optional .env file (default: .env in the working directory, if present)
        """
        load_dotenv(env_file, override=False) if env_file else load_dotenv(override=False)
        self.config_path = self._resolve_config_path(config_path) if config_path else None
        self.config = self._load_config()

    def _resolve_config_path(self, config_path: Union[str, Path]) -> Path:
        """
        Resolve the configuration file path

        Relative paths are tried against the working directory first, then
        against the project root.

        Args:
            config_path: Path to the configuration file

        Returns:
            Path: Resolved path to the configuration file
        """
        path = Path(config_path)
        if path.is_absolute() or path.exists():
            return path
        return get_project_root() / path

    def _load_config(self) -> Dict[str, Any]:
        """
        Load configuration from file

        Returns:
            dict: Configuration data (empty without a config file)

        Raises:
            ConfigError: If the configuration file is missing or unreadable
        """
        if self.config_path is None:
            return {}
        if not self.config_path.exists():
            raise ConfigError(f"Configuration file not found: {self.config_path}")
        config = read_config(self.config_path)
        if not isinstance(config, dict):
            raise ConfigError(f"Configuration file must hold a JSON object: {self.config_path}")
        logger.debug(f"Loaded configuration from {self.config_path}")
        return config

    def _environment_overrides(self, data: Dict[str, Any]) -> None:
        threads = os.environ.get(ENV_THREADS)
        if threads:
            try:
                data["threads"] = int(threads)
            except ValueError:
                raise ConfigError(f"{ENV_THREADS} must be an integer, got {threads!r}")
        level = os.environ.get(ENV_LOG_LEVEL)
        if level:
            data.setdefault("logging", {})["level"] = level.upper()

    def build(self, problem: Optional[str] = None, output_dir: Optional[str] = None, seed: Optional[int] = None,
              overrides: Optional[Dict[str, str]] = None) -> RunConfig:
        """
        Merge file, environment and command-line settings into a RunConfig

        Args:
            problem: Problem id from the command line
            output_dir: Output directory from the command line
            seed: Seed from the command line
            overrides: Dotted overrides, e.g. {"grid.n": "2001"}

        Returns:
            RunConfig: Validated configuration

        Raises:
            ConfigError: If a value is invalid
        """
        data = copy.deepcopy(self.config)
        self._environment_overrides(data)

        if problem is not None:
            data["problem"] = problem
        if output_dir is not None:
            data.pop("paths", None)
            data["output_dir"] = output_dir
        if seed is not None:
            data["seed"] = seed

        for name, raw in (overrides or {}).items():
            if name not in OVERRIDE_FIELDS:
                raise ConfigError(f"Unknown override --{name}. Supported: "
                                  + ", ".join(f"--{key}" for key in OVERRIDE_FIELDS))
            section, key, parser = OVERRIDE_FIELDS[name]
            try:
                value = parser(raw)
            except ValueError as e:
                raise ConfigError(f"Invalid value for --{name}: {raw!r} ({e})")
            data.setdefault(section, {})[key] = value

        return RunConfig.from_dict(data).validate()

    def get_full_config(self) -> Dict[str, Any]:
        """
        Get the configuration file contents

        Returns:
            dict: Complete configuration
        """
        return self.config

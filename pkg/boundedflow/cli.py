#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Command-line front end for boundedflow.
This script selects a problem, merges the run configuration and executes one
of the pipelines, writing its artifacts to the output directory:

- solve       Picard solve: solution.csv, report.json
- verify      operator check suite: verify.json
- attract     attractivity experiment: trajectories.csv, attract.json
- hypotheses  declared against estimated constants: hypotheses.json

Every run also writes manifest.json (config echo, versions, stage timings,
check summary). Exit codes: 0 success, 2 configuration error, 3 hypothesis or
condition violation, 4 non-convergence.
"""

import argparse
import copy
import logging
import platform
import sys
import time
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import scipy
from rich.console import Console
from rich.table import Table

from . import __version__
from .attractivity_harness import run_attract_experiment
from .common import (ArgumentError, BoundedFlowError, ConditionViolation, ConfigError, EvaluationError,
                     HypothesisViolation, PreconditionViolation, ToleranceError, UnsupportedProblem,
                     ensure_directory, setup_logging)
from .exp_kernel_operator import Tolerances
from .function_core import GridSpec
from .maps.catalog import get_problem, problem_from_dict
from .maps.hypotheses import (estimate_inf, estimate_lipschitz, estimate_sup, positive_solution_expected,
                              propagated_constants, verify_box)
from .picard_solver import Problem, solve_picard
from .utils.config_manager import OVERRIDE_FIELDS, ConfigManager, RunConfig
from .utils.file_utils import save_csv, save_json
from .verify_suite import VerifyContext, run_verify_suite

# Setup logger
logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3
EXIT_NOT_CONVERGED = 4

# Relative tolerance when comparing declared constants with sampled estimates
DOMINANCE_RTOL = 1e-6

EXIT_CODES: List[Tuple[type, int]] = [
    (ConfigError, EXIT_CONFIG),
    (UnsupportedProblem, EXIT_CONFIG),
    (ArgumentError, EXIT_CONFIG),
    (HypothesisViolation, EXIT_HYPOTHESIS),
    (ConditionViolation, EXIT_HYPOTHESIS),
    (PreconditionViolation, EXIT_HYPOTHESIS),
    (ToleranceError, EXIT_NOT_CONVERGED),
    (EvaluationError, EXIT_NOT_CONVERGED),
]


class RunManifest:
    """
    Record of one CLI run: config echo, versions, stage timings and one entry
    per executed check.
    """

    def __init__(self, command: str, config: RunConfig):
        self.command = command
        self.config = config
        self.timings: Dict[str, float] = {}
        self.checks: Dict[str, bool] = {}
        self.exit_code: Optional[int] = None
        self.error: Optional[str] = None

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        logger.info(f"Stage '{name}' started")
        try:
            yield
        finally:
            self.timings[name] = time.perf_counter() - start
            logger.info(f"Stage '{name}' finished in {self.timings[name]:.2f}s")

    def record_check(self, name: str, passed: bool) -> None:
        if name in self.checks:
            raise ArgumentError(f"Check '{name}' recorded twice")
        self.checks[name] = bool(passed)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "config": self.config.to_dict(),
            "versions": {
                "boundedflow": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
            "timings": self.timings,
            "checks": [{"name": name, "pass": passed} for name, passed in self.checks.items()],
            "exit_code": self.exit_code,
            "error": self.error,
        }


def build_problem(config: RunConfig) -> Problem:
    """
    Problem named or described by the configuration

    Raises:
        ConfigError: If the problem id is unknown or the description invalid
    """
    if isinstance(config.problem, str):
        return get_problem(config.problem, **config.constants)
    data = copy.deepcopy(config.problem)
    data.setdefault("constants", {}).update(config.constants)
    return problem_from_dict(data)


def build_grid(config: RunConfig) -> GridSpec:
    return GridSpec(config.grid.t0, config.grid.t1, config.grid.n)


def build_tolerances(config: RunConfig) -> Tolerances:
    return Tolerances(tail_tol=config.tolerances.tail_tol, quad_tol=config.tolerances.quad_tol)


def print_summary(title: str, rows: List[Tuple[str, str, Optional[bool]]]) -> None:
    """Render a result table on the console."""
    table = Table(title=title)
    table.add_column("Item", style="cyan")
    table.add_column("Value", justify="right")
    table.add_column("Result")
    for name, value, passed in rows:
        verdict = "" if passed is None else ("[green]pass[/green]" if passed else "[red]FAIL[/red]")
        table.add_row(name, value, verdict)
    Console().print(table)


def cmd_solve(config: RunConfig, manifest: RunManifest) -> int:
    """
    Solve for the bounded solution and write solution.csv and report.json

    Returns:
        int: 0 when converged, 3 when the iterates left the box, 4 otherwise
    """
    out = ensure_directory(config.output_dir)
    problem = build_problem(config)
    grid = build_grid(config)

    with manifest.stage("solve"):
        report = solve_picard(
            problem,
            grid,
            step_tol=config.tolerances.step_tol,
            max_iter=config.solver.max_iter,
            tolerances=build_tolerances(config),
            residual_tol=config.tolerances.residual_tol,
            damping=config.solver.damping,
        )

    with manifest.stage("write"):
        save_csv(["t", "x"], [report.solution.nodes, report.solution.values], out / "solution.csv")
        save_json({"problem": problem.to_dict(), "grid": {"t0": grid.t0, "t1": grid.t1, "n": grid.n},
                   "constants": problem.constants.to_dict(), **report.to_dict()},
                  out / "report.json")

    manifest.record_check("converged", report.converged)
    manifest.record_check("within_box", report.within_box)

    certificate = "n/a" if report.certified_error is None else f"{report.certified_error:.3e}"
    print_summary(f"solve: {problem.name}", [
        ("contraction factor q", f"{report.q:.6g}", report.q < 1.0),
        ("iterations", str(report.iterations), None),
        ("last step", f"{report.last_step:.3e}", None),
        ("certified error", certificate, None),
        ("residual", f"{report.residual:.3e}", report.residual <= config.tolerances.residual_tol),
        ("iterate range", f"[{report.iterate_min:.6g}, {report.iterate_max:.6g}]", report.within_box),
        ("converged", str(report.converged), report.converged),
    ])

    if not report.within_box:
        logger.error(f"Iterates left the box by {report.box_violation:.3e}")
        return EXIT_HYPOTHESIS
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_verify(config: RunConfig, manifest: RunManifest) -> int:
    """
    Run the operator check suite and write verify.json

    Returns:
        int: 0 when every check passes, 3 otherwise
    """
    out = ensure_directory(config.output_dir)
    ctx = VerifyContext(tolerances=build_tolerances(config), seed=config.seed)

    with manifest.stage("verify"):
        results = run_verify_suite(ctx, max_workers=config.threads)

    for result in results:
        manifest.record_check(result.name, result.passed)
    passed = all(result.passed for result in results)

    with manifest.stage("write"):
        save_json({"checks": [result.to_dict() for result in results], "pass": passed}, out / "verify.json")

    print_summary("verify", [(r.name, f"{r.measured:.3e} / {r.threshold:.3e}", r.passed) for r in results])
    return EXIT_OK if passed else EXIT_HYPOTHESIS


def cmd_attract(config: RunConfig, manifest: RunManifest) -> int:
    """
    Run the attractivity experiment and write trajectories.csv and attract.json

    Returns:
        int: 0 when every decay check passes, 3 otherwise

    Raises:
        ConditionViolation: If the attractivity rate is not positive
        UnsupportedProblem: If the problem has nonlocal terms
    """
    out = ensure_directory(config.output_dir)
    problem = build_problem(config)
    attract = config.attract

    with manifest.stage("attract"):
        result = run_attract_experiment(
            problem,
            build_grid(config),
            attract.perturbations,
            attract.horizon,
            attract.h,
            t_start=attract.t_start,
            slack=config.tolerances.slack,
            max_workers=config.threads,
            step_tol=config.tolerances.step_tol,
            max_iter=config.solver.max_iter,
            tolerances=build_tolerances(config),
            residual_tol=config.tolerances.residual_tol,
            damping=config.solver.damping,
        )

    x_star = result.solve_report.solution
    with manifest.stage("write"):
        if result.trajectory is None:
            save_csv(["t", "x_star"], [x_star.nodes, x_star.values], out / "trajectories.csv")
        else:
            times = result.trajectory.times
            states = result.trajectory.states.reshape(len(times), -1)
            header = ["t", "x_star"] + [f"x_delta_{i}" for i in range(states.shape[1])]
            columns = [times, x_star(np.clip(times, x_star.t0, x_star.t1))] + list(states.T)
            save_csv(header, columns, out / "trajectories.csv")
        save_json({
            "problem": problem.name,
            "lambda": result.lambda_used,
            "perturbations": list(attract.perturbations),
            "reports": [report.to_dict() for report in result.reports],
            "solve": result.solve_report.to_dict(),
        }, out / "attract.json")

    for i, report in enumerate(result.reports):
        manifest.record_check(f"decay_{i}", report.passed)
    passed = all(report.passed for report in result.reports)

    print_summary(f"attract: {problem.name} (lambda = {result.lambda_used:.6g})", [
        (f"delta = {r.perturbation:+g}", f"max ratio {r.max_ratio:.4f}", r.passed) for r in result.reports
    ])
    return EXIT_OK if passed else EXIT_HYPOTHESIS


def _dominance(name: str, declared: float, estimate: float, declared_above: bool) -> Dict[str, Any]:
    margin = DOMINANCE_RTOL * max(1.0, abs(declared), abs(estimate))
    passed = declared + margin >= estimate if declared_above else declared - margin <= estimate
    return {"name": name, "declared": declared, "estimate": estimate,
            "relation": "declared >= estimate" if declared_above else "declared <= estimate", "pass": bool(passed)}


def cmd_hypotheses(config: RunConfig, manifest: RunManifest) -> int:
    """
    Compare declared constants with sampled estimates and write hypotheses.json

    Returns:
        int: 0 when the declared constants dominate every estimate, 3 otherwise
    """
    out = ensure_directory(config.output_dir)
    problem = build_problem(config)
    c = problem.constants
    box = (c.k, c.M)
    est = config.estimators
    options = dict(t_window=tuple(est.t_window), n_samples=est.n_samples, seed=config.seed,
                   quad_tol=config.tolerances.quad_tol, max_workers=config.threads)

    with manifest.stage("estimate"):
        inf_G = estimate_inf(problem.G, box, n_probes=est.n_probes, **options)
        sup_F = estimate_sup(problem.F, box, n_probes=est.n_probes, **options)
        L_F = estimate_lipschitz(problem.F, box, n_pairs=est.n_pairs, **options)
        L_G = estimate_lipschitz(problem.G, box, n_pairs=est.n_pairs, **options)
    with manifest.stage("box"):
        box_report = verify_box(problem.F, problem.G, c.k, c.M, n_probes=est.n_probes, **options)

    checks = [
        _dominance("l", c.l, inf_G, declared_above=False),
        _dominance("r", c.r, sup_F, declared_above=True),
        _dominance("L_F", c.L_F, L_F, declared_above=True),
        _dominance("L_G", c.L_G, L_G, declared_above=True),
        {"name": "box", "declared": [c.k, c.M], "estimate": [box_report.ratio_min, box_report.ratio_max],
         "relation": "k <= F/G <= M", "pass": box_report.passed},
    ]
    for check in checks:
        manifest.record_check(check["name"], check["pass"])
    passed = all(check["pass"] for check in checks)

    propagated = {name: asdict(propagated_constants(term, box)) for name, term in (("F", problem.F), ("G", problem.G))}
    with manifest.stage("write"):
        save_json({
            "problem": problem.name,
            "declared": c.to_dict(),
            "estimated": {"inf_G": inf_G, "sup_F": sup_F, "L_F": L_F, "L_G": L_G},
            "propagated": propagated,
            "box": asdict(box_report),
            "checks": checks,
            "contraction_factor": c.q,
            "attractivity_rate": c.lambda_,
            "positive_solution_expected": positive_solution_expected(problem.F, box),
            "pass": passed,
        }, out / "hypotheses.json")

    rows = [(check["name"], f"{check['declared']} vs {check['estimate']}", check["pass"]) for check in checks]
    rows += [("contraction factor q", f"{c.q:.6g}", c.q < 1.0), ("attractivity rate", f"{c.lambda_:.6g}", None)]
    print_summary(f"hypotheses: {problem.name}", rows)
    return EXIT_OK if passed else EXIT_HYPOTHESIS


COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "attract": cmd_attract,
    "hypotheses": cmd_hypotheses,
}


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """
    Parse command line arguments

    Args:
        argv: Argument list (default: sys.argv[1:])

    Returns:
        argparse.Namespace: Parsed arguments
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='Path to a JSON configuration file')
    common.add_argument('--problem', help='Built-in problem id (c2pi, exatt, ex0, ex1)')
    common.add_argument('--out', help='Output directory')
    common.add_argument('--seed', type=int, help='Seed of the estimator probes and check corpus')
    overrides = common.add_argument_group('per-field overrides')
    for name in OVERRIDE_FIELDS:
        overrides.add_argument(f'--{name}', dest=f'override:{name}', metavar='VALUE')

    parser = argparse.ArgumentParser(prog='boundedflow',
                                     description='Bounded whole-line solutions of x\' + G(x, t) x = F(x, t)')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    subparsers = parser.add_subparsers(dest='command', required=True)
    subparsers.add_parser('solve', parents=[common], help='Solve for the bounded solution')
    subparsers.add_parser('verify', parents=[common], help='Run the operator check suite')
    subparsers.add_parser('attract', parents=[common], help='Check exponential attraction of perturbed solutions')
    subparsers.add_parser('hypotheses', parents=[common], help='Compare declared constants with estimates')
    return parser.parse_args(argv)


def _exit_code(error: BaseException) -> int:
    for error_type, code in EXIT_CODES:
        if isinstance(error, error_type):
            return code
    return 1


def run(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand

    Args:
        argv: Argument list (default: sys.argv[1:])

    Returns:
        int: Exit code
    """
    args = parse_arguments(argv)
    overrides = {key.split(":", 1)[1]: value for key, value in vars(args).items()
                 if key.startswith("override:") and value is not None}

    try:
        config = ConfigManager(args.config).build(problem=args.problem, output_dir=args.out, seed=args.seed,
                                                  overrides=overrides)
        log_level = logging.getLevelName(config.logging.level.upper())
        if not isinstance(log_level, int):
            raise ConfigError(f"Unknown log level: {config.logging.level}")
    except ConfigError as e:
        Console(stderr=True).print(f"[red]Configuration error:[/red] {e}")
        return EXIT_CONFIG

    setup_logging("boundedflow", log_level, config.logging.log_to_file)
    manifest = RunManifest(args.command, config)
    try:
        manifest.exit_code = COMMANDS[args.command](config, manifest)
    except (BoundedFlowError, ValueError) as e:
        manifest.exit_code = _exit_code(e)
        manifest.error = f"{e.__class__.__name__}: {e}"
        logger.error(f"Error in {args.command}: {e}")
    finally:
        if manifest.exit_code is None:
            manifest.exit_code = 1
        save_json(manifest.to_dict(), Path(config.output_dir) / "manifest.json")

    return manifest.exit_code


def main():
    """
    Main function for command line usage
    """
    sys.exit(run())


if __name__ == "__main__":
    main()

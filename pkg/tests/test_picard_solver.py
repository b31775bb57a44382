import math

import numpy as np
import pytest
from scipy.integrate import quad

from boundedflow.common import ArgumentError
from boundedflow.exp_kernel_operator import Tolerances
from boundedflow.function_core import GridFunction, GridSpec
from boundedflow.maps.catalog import get_problem
from boundedflow.maps.hypotheses import HypothesisConstants
from boundedflow.maps.term_factory import descriptor_from_dict
from boundedflow.picard_solver import (MINUS_G, PLUS_G, Problem, SolveReport, certify, gamma, residual,
                                       solve_picard, working_grid)

C2PI_GRID = GridSpec(-5.0, 5.0, 401)


def const(value):
    return {"kind": "const", "function": {"kind": "constant", "value": value}}


def make_problem(F, G, sign=PLUS_G, initial_value=None, **constants):
    return Problem(F=descriptor_from_dict(F), G=descriptor_from_dict(G),
                   constants=HypothesisConstants(**constants), sign=sign, name="test",
                   initial_value=initial_value)


def report_with(step, damping):
    return SolveReport(solution=GridFunction.constant(0.0, 0.0, 1.0, 3), iterations=1, step_norms=(step,),
                       residual=0.0, box_violation=0.0, iterate_min=0.0, iterate_max=0.0, certified_error=None,
                       converged=True, damping=damping, q=0.75)


@pytest.fixture(scope="module")
def c2pi():
    return get_problem("c2pi")


@pytest.fixture(scope="module")
def c2pi_report(c2pi):
    return solve_picard(c2pi, C2PI_GRID)


def test_certificate(c2pi):
    assert certify(report_with(1e-3, 1.0), c2pi.constants) == pytest.approx(3e-3)
    assert certify(report_with(1e-3, 0.5), c2pi.constants) == pytest.approx(7e-3)
    assert certify(report_with(1e-3, 1.0), get_problem("ex1").constants) is None


def test_working_grid_pads_the_read_side(c2pi, tolerances):
    padded, offset = working_grid(c2pi, C2PI_GRID, tolerances)
    assert padded.h == pytest.approx(C2PI_GRID.h)
    assert padded.t1 == C2PI_GRID.t1
    assert padded.nodes[offset] == pytest.approx(C2PI_GRID.t0)
    assert offset > 0

    flipped = make_problem(const(1.0), const(2.0), sign=MINUS_G, l=2.0, k=0.0, M=1.0, r=1.0, L_F=0.0, L_G=0.0)
    padded, offset = working_grid(flipped, C2PI_GRID, tolerances)
    assert offset == 0
    assert padded.t1 > C2PI_GRID.t1


def test_gamma_of_constant_problem(tolerances):
    p = make_problem(const(3.0), const(4.0), l=4.0, k=0.0, M=1.0, r=3.0, L_F=0.0, L_G=0.0)
    image = gamma(p, GridFunction.constant(0.2, -2.0, 2.0, 5), GridSpec(-2.0, 2.0, 41), tolerances)
    assert np.allclose(image.values, 0.75, atol=10.0 * tolerances.total)


def test_gamma_of_exatt_at_zero(tolerances):
    p = get_problem("exatt")
    grid = GridSpec(-2.0, 2.0, 81)
    image = gamma(p, GridFunction.constant(0.0, -2.0, 2.0, 5), grid, tolerances)

    def integrand(s):
        # int_s^0 G(0)(u) du in closed form
        rate = -4.0 * s + math.cos(s) - 1.0 + (math.cos(math.sqrt(2.0) * s) - 1.0) / math.sqrt(2.0) - math.atan(s)
        return math.exp(-rate) * 0.1 * (2.0 + math.cos(s))

    expected, _ = quad(integrand, -40.0, 0.0, epsabs=1e-13, epsrel=1e-13, limit=200)
    zero = int(np.argmin(np.abs(grid.nodes)))
    assert image.values[zero] == pytest.approx(expected, abs=1e-7)
    assert image.values.min() >= 0.0
    assert image.values.max() <= 0.4


def test_gamma_reverse_sign_lands_in_mirrored_box(tolerances):
    F = {"kind": "sum", "terms": [const(1.0), {"kind": "pointwise", "post": "sin", "weight": {"kind": "decay"}}]}
    G = {"kind": "sum", "terms": [const(2.0), {"kind": "pointwise", "post": "cos", "weight": {"kind": "decay"}}]}
    p = make_problem(F, G, sign=MINUS_G, l=1.0, k=0.0, M=2.0, r=2.0, L_F=1.0, L_G=1.0)
    assert p.box == (-2.0, 0.0)
    x = GridFunction.from_function(lambda t: -1.0 + 0.5 * np.sin(t), -5.0, 30.0, 701)
    image = gamma(p, x, GridSpec(-2.0, 2.0, 41), tolerances)
    eta = 10.0 * tolerances.total
    assert image.values.min() >= -2.0 - eta
    assert image.values.max() <= eta
    assert image.values.max() < 0.0


def test_solution_is_a_fixed_point_of_gamma(c2pi):
    tolerances = Tolerances()
    work, offset = working_grid(c2pi, C2PI_GRID, tolerances)
    report = solve_picard(c2pi, work, tolerances=tolerances)
    assert report.converged
    image = gamma(c2pi, report.solution, C2PI_GRID, tolerances)
    on_window = report.solution.values[offset:offset + C2PI_GRID.n]
    assert np.max(np.abs(image.values - on_window)) <= 2.0 * 1e-8 + 10.0 * tolerances.total


def test_c2pi_converges_in_the_box(c2pi_report):
    report = c2pi_report
    assert report.converged
    assert report.within_box
    assert report.residual <= 1e-4
    assert report.last_step <= 1e-8
    assert report.certified_error == pytest.approx(certify(report, get_problem("c2pi").constants))
    assert report.certified_error <= 1e-6
    values = report.solution.values
    assert values.min() >= -1e-6
    assert values.max() <= 2.0 / 3.0 + 1e-6
    assert report.solution.t0 == pytest.approx(-5.0)
    assert report.solution.n == 401


def test_c2pi_steps_shrink_geometrically(c2pi_report):
    steps = c2pi_report.step_norms
    ratios = [b / a for a, b in zip(steps, steps[1:]) if a > 1e-6]
    assert ratios
    assert max(ratios) <= 0.8


def test_c2pi_solution_is_unique(c2pi):
    grid = GridSpec(-3.0, 3.0, 241)
    low, high = (solve_picard(c2pi, grid, x0=GridFunction.constant(v, -3.0, 3.0, 5)) for v in (0.0, 0.5))
    bound = 2.0 * max(low.certified_error, high.certified_error) + 1e-6
    assert np.max(np.abs(low.solution.values - high.solution.values)) <= bound


def test_exatt_solution_stays_in_box():
    report = solve_picard(get_problem("exatt"), GridSpec(-4.0, 4.0, 161))
    assert report.converged
    assert report.solution.values.min() >= -1e-6
    assert report.solution.values.max() <= 0.4 + 1e-6


def test_zero_forcing_gives_zero_solution():
    p = make_problem(const(0.0), const(1.0), l=1.0, k=0.0, M=1.0, r=0.0, L_F=0.0, L_G=0.0)
    report = solve_picard(p, GridSpec(-2.0, 2.0, 41))
    assert report.converged
    assert np.array_equal(report.solution.values, np.zeros(41))


def test_reverse_sign_problem():
    p = make_problem(const(1.0), const(2.0), sign=MINUS_G, l=2.0, k=0.0, M=1.0, r=1.0, L_F=0.0, L_G=0.0)
    report = solve_picard(p, GridSpec(-2.0, 2.0, 41))
    assert report.converged
    assert np.allclose(report.solution.values, -0.5, atol=1e-7)
    assert report.within_box


def test_residual_of_exact_solution(small_grid):
    sine = {"kind": "const", "function": {"kind": "trig", "offset": 0.0,
                                          "terms": [{"amp": 1.0, "freq": 1.0, "fn": "sin"}]}}
    p = make_problem(sine, const(1.0), l=1.0, k=-1.0, M=1.0, r=1.0, L_F=0.0, L_G=0.0)
    t = small_grid.nodes
    exact = GridFunction(small_grid.t0, small_grid.t1, 0.5 * (np.sin(t) - np.cos(t)))
    assert residual(p, exact) <= 1e-5
    assert residual(p, exact.with_values(np.zeros(small_grid.n))) > 0.5


def test_residual_needs_interior_nodes():
    p = make_problem(const(0.0), const(1.0), l=1.0, k=0.0, M=1.0, r=0.0, L_F=0.0, L_G=0.0)
    with pytest.raises(ArgumentError):
        residual(p, GridFunction.constant(0.0, 0.0, 1.0, 4))


def test_oscillation_lowers_damping():
    # Gamma(c) = -2c on constants: undamped iterates blow up, theta = 1/2 contracts
    p = make_problem({"kind": "scale", "c": -2.0, "term": {"kind": "pointwise", "post": "identity"}}, const(1.0),
                     initial_value=0.5, l=1.0, k=-1.0, M=1.0, r=2.0, L_F=2.0, L_G=0.0)
    report = solve_picard(p, GridSpec(-2.0, 2.0, 41), tolerances=Tolerances(1e-9, 1e-9))
    assert report.damping == 0.5
    assert any("oscillation" in warning for warning in report.warnings)
    assert report.converged
    assert not report.within_box
    assert report.certified_error is None


def test_non_convergence_is_reported():
    p = make_problem({"kind": "scale", "c": -2.0, "term": {"kind": "pointwise", "post": "identity"}}, const(1.0),
                     initial_value=0.5, l=1.0, k=-1.0, M=1.0, r=2.0, L_F=2.0, L_G=0.0)
    report = solve_picard(p, GridSpec(-2.0, 2.0, 41), max_iter=3)
    assert not report.converged
    assert report.iterations == 3
    assert any("not converged" in warning for warning in report.warnings)


@pytest.mark.parametrize("kwargs", [dict(damping=0.0), dict(damping=1.5), dict(max_iter=0), dict(step_tol=0.0)])
def test_invalid_solver_arguments(c2pi, kwargs):
    with pytest.raises(ArgumentError):
        solve_picard(c2pi, C2PI_GRID, **kwargs)


@pytest.mark.slow
def test_ex0_residual_on_full_window():
    report = solve_picard(get_problem("ex0"), GridSpec(-20.0, 20.0, 801))
    assert report.converged
    assert report.residual <= 1e-3
    assert report.within_box


def test_enlarged_window_keeps_the_solution(c2pi, c2pi_report):
    tolerances = Tolerances()
    wide = solve_picard(c2pi, GridSpec(-6.0, 6.0, 481))
    assert wide.solution.h == pytest.approx(C2PI_GRID.h)
    inner = wide.solution.values[40:40 + C2PI_GRID.n]
    budget = 5.0 * (tolerances.total + 1e-8) + wide.certified_error + c2pi_report.certified_error
    assert np.max(np.abs(inner - c2pi_report.solution.values)) <= budget

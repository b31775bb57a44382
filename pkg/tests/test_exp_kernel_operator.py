import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundedflow.common import PreconditionViolation
from boundedflow.exp_kernel_operator import (Tolerances, TruncationPlan, apply_T, apply_T_reverse, central_difference,
                                             check_unit_mass, derivative_identity_residual, equicontinuity_bound,
                                             equicontinuity_modulus, ergodic_defect, lipschitz_bound_check,
                                             mirror_defect, periodicity_defect)
from boundedflow.function_core import BoundedFunction, GridSpec, TrigTerm, decay, trig_polynomial
from boundedflow.verify_suite import unit_mass_corpus

SINE = trig_polynomial(0.0, [TrigTerm(1.0, 1.0, 0.0, "sin")])
COSINE = trig_polynomial(0.0, [TrigTerm(1.0, 1.0, 0.0, "cos")])


def test_truncation_tail_matches_budget():
    plan = TruncationPlan.build(2.0, 3.0, 1e-9)
    assert plan.depth == pytest.approx(math.log(3.0 / 2e-9) / 2.0)
    assert plan.tail_bound(3.0) == pytest.approx(1e-9)


def test_truncation_needs_positive_lower_bound():
    with pytest.raises(PreconditionViolation):
        TruncationPlan.build(0.0, 1.0, 1e-9)


def test_negligible_forcing_gives_zero(small_grid, tolerances):
    assert np.array_equal(apply_T(BoundedFunction.constant(0.0), BoundedFunction.constant(1.0), 1.0,
                                  small_grid, tolerances).values, np.zeros(small_grid.n))


@pytest.mark.parametrize("name", list(unit_mass_corpus()))
@pytest.mark.parametrize("t", [-37.5, 0.0, 12.25])
def test_kernel_has_unit_mass(name, t):
    g, l = unit_mass_corpus()[name]
    assert check_unit_mass(g, l, t, Tolerances(5e-7, 5e-7)) == pytest.approx(1.0, abs=1e-6)


def test_forward_oracle(small_grid, tolerances):
    t = small_grid.nodes
    values = apply_T(SINE, BoundedFunction.constant(1.0), 1.0, small_grid, tolerances).values
    assert np.max(np.abs(values - 0.5 * (np.sin(t) - np.cos(t)))) <= 1e-7


def test_reverse_oracle(small_grid, tolerances):
    t = small_grid.nodes
    values = apply_T_reverse(COSINE, BoundedFunction.constant(2.0), 2.0, small_grid, tolerances).values
    assert np.max(np.abs(values - (2.0 * np.cos(t) - np.sin(t)) / 5.0)) <= 1e-7


@settings(max_examples=25, deadline=None)
@given(st.floats(-5.0, 5.0), st.floats(0.5, 4.0))
def test_constant_forcing(c, a):
    grid = GridSpec(0.0, 1.0, 5)
    values = apply_T(BoundedFunction.constant(c), BoundedFunction.constant(a), a, grid,
                     Tolerances(1e-9, 1e-9)).values
    assert np.allclose(values, c / a, atol=1e-7)


def test_rate_below_lower_bound_is_rejected(small_grid, tolerances):
    g = trig_polynomial(1.0, [TrigTerm(1.0, 1.0)])
    with pytest.raises(PreconditionViolation) as info:
        apply_T(SINE, g, 0.5, small_grid, tolerances)
    assert info.value.t is not None


def test_central_difference_is_exact_on_quartics():
    t = np.linspace(-1.0, 1.0, 21)
    assert np.allclose(central_difference(t ** 4, 0.1), 4.0 * t[2:-2] ** 3, atol=1e-10)


def test_derivative_identity_converges():
    f = trig_polynomial(0.0, [TrigTerm(1.0, 1.0), TrigTerm(1.0, math.sqrt(2.0), 0.0, "cos")])
    g = trig_polynomial(2.0, [TrigTerm(1.0, 1.0)])
    tolerances = Tolerances(1e-10, 1e-10)
    coarse, fine = (derivative_identity_residual(apply_T(f, g, 1.0, GridSpec(-5.0, 5.0, n), tolerances), f, g)
                    for n in (41, 81))
    assert coarse / fine >= 12.0


def test_reverse_derivative_identity(small_grid, tolerances):
    g = BoundedFunction.constant(2.0)
    values = apply_T_reverse(COSINE, g, 2.0, small_grid, tolerances)
    assert derivative_identity_residual(values, COSINE, g, reverse=True) <= 1e-5


def test_lipschitz_bound_holds(small_grid, tolerances):
    f2 = SINE + trig_polynomial(0.0, [TrigTerm(0.1, 1.0, 0.0, "cos")])
    g1 = BoundedFunction.constant(2.0)
    g2 = trig_polynomial(2.0, [TrigTerm(0.1, 1.0)])
    report = lipschitz_bound_check(SINE, g1, f2, g2, 1.9, 2.0, small_grid, tolerances)
    assert report.passed
    assert 0.0 < report.lhs <= report.rhs


def test_lipschitz_bound_rejects_large_forcing(small_grid, tolerances):
    big = trig_polynomial(0.0, [TrigTerm(2.0, 1.0)])
    g = BoundedFunction.constant(1.0)
    with pytest.raises(PreconditionViolation):
        lipschitz_bound_check(big, g, SINE, g, 1.0, 1.0, small_grid, tolerances)


def test_equicontinuity_within_bound(small_grid, tolerances):
    g = BoundedFunction.constant(1.0)
    assert equicontinuity_bound(SINE, g, 1.0) == 2.0
    assert equicontinuity_modulus(SINE, g, 1.0, small_grid, tolerances) <= 2.0


def test_periodic_input_gives_periodic_output(small_grid, tolerances):
    f = SINE + trig_polynomial(0.0, [TrigTerm(0.5, 2.0, 0.0, "cos")])
    g = trig_polynomial(2.0, [TrigTerm(1.0, 1.0, 0.0, "cos")])
    assert periodicity_defect(f, g, 1.0, 2.0 * math.pi, small_grid, tolerances) <= 10.0 * tolerances.total
    assert periodicity_defect(f, g, 1.0, 1.0, small_grid, tolerances) > 1e-2


def test_reverse_operator_is_mirrored_forward(small_grid, tolerances):
    f = SINE + trig_polynomial(0.0, [TrigTerm(0.5, math.sqrt(2.0), 0.0, "cos")])
    g = trig_polynomial(2.0, [TrigTerm(1.0, 1.0)])
    assert mirror_defect(f, g, 1.0, small_grid, tolerances) <= 10.0 * tolerances.total


def test_ergodic_perturbation_mean_vanishes(tolerances):
    g = trig_polynomial(2.0, [TrigTerm(1.0, 1.0, 0.0, "cos")])
    near, far = (ergodic_defect(SINE, decay(), g, 1.0, r, int(20 * r) + 1, tolerances) for r in (10.0, 40.0))
    assert far < 0.5 * near


@pytest.mark.parametrize("f, g, l", [
    (SINE + trig_polynomial(0.0, [TrigTerm(0.5, math.sqrt(2.0), 0.0, "cos")]),
     trig_polynomial(2.0, [TrigTerm(1.0, 1.0)]), 1.0),
    (BoundedFunction.constant(-3.0), BoundedFunction.constant(1.5), 1.5),
    (decay(), trig_polynomial(1.0, [TrigTerm(0.5, 3.0, 0.0, "cos")]), 0.5),
])
def test_operator_respects_sup_bound(f, g, l, small_grid, tolerances):
    values = apply_T(f, g, l, small_grid, tolerances).values
    assert np.max(np.abs(values)) <= f.sup_bound / l + tolerances.total


def test_equicontinuity_bound_samples_understated_claims():
    understated = BoundedFunction.closed_form(lambda t: 2.0 * np.sin(t), 0.5)
    g = BoundedFunction.constant(1.0)
    assert equicontinuity_bound(understated, g, 1.0) == 1.0
    assert equicontinuity_bound(understated, g, 1.0, (-5.0, 5.0)) == pytest.approx(4.0, rel=1e-5)
    assert equicontinuity_bound(SINE, g, 1.0, (-5.0, 5.0)) == 2.0

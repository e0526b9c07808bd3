import math
from fractions import Fraction

import numpy as np
import pytest

from retard_oc.cost import evaluate_cost
from retard_oc.errors import OutOfDomainError
from retard_oc.problems import CandidateSolution, StateLinearProblem
from retard_oc.registry import make_zero_candidate, make_zero_problem
from retard_oc.trajectory import from_pieces

E2 = math.exp(2.0)
E4 = math.exp(4.0)
E6 = math.exp(6.0)

# closed-form minimal cost of the state-linear benchmark
LD_CLOSED_FORM = (23.0 + E2 + 34.0 * E4 - 2.0 * E6) / 16.0


def _d_cost_oracle():
    """Independent oracle for the nonlinear benchmark: minus the value of the
    verification function at the start, -(eta1(0) * x_a + c1(0))."""
    q2 = (E2 + 1.0) ** 2
    eta1_0 = 5.0 + 2.0 * (E2 - 1.0) / q2
    c1_0 = (1.0 - E4 - 15.0 * E4 - 32.0 * E2 - 9.0) / (2.0 * q2)
    return -(eta1_0 * 1.0 + c1_0)


def test_ld_cost_matches_closed_form(ld_problem, ld_candidate):
    cost = evaluate_cost(ld_problem, ld_candidate, 512)
    assert cost == pytest.approx(LD_CLOSED_FORM, abs=1e-9)
    assert cost == pytest.approx(67.491786, abs=1e-3)


def test_zero_problem_costs_nothing():
    assert evaluate_cost(make_zero_problem(), make_zero_candidate(), 64) == 0.0


def test_d_cost_matches_value_function_oracle(d_problem, d_candidate):
    oracle = _d_cost_oracle()
    cost = evaluate_cost(d_problem, d_candidate, 512)
    assert cost == pytest.approx(oracle, abs=1e-8)


def test_ld_cost_stable_under_doubling(ld_problem, ld_candidate):
    c1 = evaluate_cost(ld_problem, ld_candidate, 512)
    c2 = evaluate_cost(ld_problem, ld_candidate, 1024)
    assert abs(c2 - c1) <= 1e-10


def _polynomial_problem_and_candidate():
    # running cost t^2 x + u^2 with polynomial curves: Simpson integrates the
    # resulting cubic integrand exactly at any resolution
    problem = StateLinearProblem(
        a=Fraction(0), b=Fraction(2), r=Fraction(1), s=Fraction(1), n=1, m=1,
        A=lambda t: np.array([[0.0]]), A_D=lambda t: np.array([[0.0]]),
        g=lambda t, u: np.array([0.0]), g_D=lambda t, v: np.array([0.0]),
        f0x=lambda t, x, y: t * t * float(x[0]),
        f0u=lambda t, u, v: float(u[0]) ** 2,
        phi=lambda t: np.array([1.0]), psi=lambda t: np.array([0.0]),
        name="poly-fixture")
    state = from_pieces(1, [(-1, 0, lambda t: [1.0]), (0, 2, lambda t: [1.0])],
                        main_start=0)
    control = from_pieces(1, [(-1, 0, lambda t: [0.0]), (0, 2, lambda t: [t])],
                          main_start=0)
    return problem, CandidateSolution(state=state, control=control)


def test_refinement_invariance_on_polynomial_family():
    problem, cand = _polynomial_problem_and_candidate()
    baseline = evaluate_cost(problem, cand, 64)
    # exact value: int_0^2 t^2 + t^2 dt = 16/3
    assert baseline == pytest.approx(16.0 / 3.0, rel=1e-13)
    for steps in (128, 256, 512):
        refined = evaluate_cost(problem, cand, steps)
        assert abs(refined - baseline) <= 1e-12 * abs(baseline)


def test_quadrature_rejects_odd_step_count(ld_problem, ld_candidate):
    with pytest.raises(ValueError):
        evaluate_cost(ld_problem, ld_candidate, 63)


def test_uncovered_domain_raises(ld_problem, ld_candidate):
    short_control = from_pieces(1, [(0, 4, lambda t: [0.0])], main_start=0)
    with pytest.raises(OutOfDomainError):
        evaluate_cost(ld_problem,
                      CandidateSolution(state=ld_candidate.state,
                                        control=short_control), 64)

import textwrap
from fractions import Fraction

import numpy as np
import pytest

from retard_oc.cost import evaluate_cost
from retard_oc.errors import ProblemFileError
from retard_oc.probfile import (parse_expression, parse_problem,
                                parse_value_function)
from retard_oc.registry import LD_COST, make_d_value_function, make_ld_candidate
from retard_oc.solve import TranscriptionConfig, solve_direct_euler
from retard_oc.dde import IntegratorConfig

LD_FILE = textwrap.dedent("""\
    # scalar benchmark in declarative form
    problem ld-from-file
    kind state-linear
    horizon a = 0  b = 4
    delays r = 2  s = 1
    dims n = 1  m = 1
    control-set all
    A[0,0] = 1
    AD[0,0] = 1
    g[0] = 0
    gD[0] = -10*v0
    f0x = x0
    f0u = 100*u0^2
    phi[0] = 1
    psi[0] = 0
    """)


def test_parse_benchmark_file():
    problem = parse_problem(LD_FILE)
    assert problem.name == "ld-from-file"
    assert (problem.a, problem.b, problem.r, problem.s) == (0, 4, 2, 1)
    assert problem.dynamics(0.0, [1.0], [1.0], [0.0], [0.5])[0] == pytest.approx(-3.0)
    cost = evaluate_cost(problem, make_ld_candidate(), 512)
    assert cost == pytest.approx(LD_COST, abs=1e-9)


def test_parsed_partials_are_exact():
    problem = parse_problem(LD_FILE)
    np.testing.assert_allclose(problem.f0x_dx(0.7, [2.0], [3.0]), [1.0])
    np.testing.assert_allclose(problem.f0x_dy(0.7, [2.0], [3.0]), [0.0])


def test_file_problem_is_solvable():
    problem = parse_problem(LD_FILE)
    sol = solve_direct_euler(problem,
                             TranscriptionConfig(n_steps=400, grad_tol=1e-8),
                             IntegratorConfig(substeps_per_cell=8))
    assert abs(sol.cost - LD_COST) <= 0.1


def test_polynomial_coefficients_and_box():
    text = textwrap.dedent("""\
        problem time-varying
        kind state-linear
        horizon a = 0  b = 2
        delays r = 1  s = 1/2
        dims n = 1  m = 1
        control-set box lo = -1 hi = 1
        A[0,0] = 0.5*t^2 - 1
        AD[0,0] = 0
        g[0] = t*u0 + u0^2
        gD[0] = 0
        f0x = x0^2 + y0^2 + t*x0*y0
        f0u = u0^2 + v0^2
        phi[0] = 1 + t
        psi[0] = 0
        """)
    problem = parse_problem(text)
    assert problem.lattice().h == Fraction(1, 2)
    assert problem.A(2.0)[0, 0] == pytest.approx(1.0)
    assert problem.g(2.0, np.array([3.0]))[0] == pytest.approx(15.0)
    assert problem.f0x(2.0, [1.0], [2.0]) == pytest.approx(1 + 4 + 4)
    assert problem.phi(-0.5)[0] == pytest.approx(0.5)
    assert not problem.control_set.is_free
    np.testing.assert_allclose(problem.control_set.project(np.array([3.0])), [1.0])


@pytest.mark.parametrize("mangle,expect_line", [
    (("f0u = 100*u0^2", "f0u = 100*u0^^2"), 13),
    (("f0x = x0", "f0x = x0 + u0"), 12),
    (("A[0,0] = 1", "A[7,0] = 1"), None),      # range error, file-level
    (("dims n = 1  m = 1", "dims n = 1"), None),
])
def test_malformed_lines_report_position(mangle, expect_line):
    bad = LD_FILE.replace(*mangle)
    with pytest.raises(ProblemFileError) as err:
        parse_problem(bad)
    if expect_line is not None:
        assert err.value.line == expect_line


def test_unknown_field_rejected():
    bad = LD_FILE + "Q[0] = 1\n"
    with pytest.raises(ProblemFileError, match="unknown field"):
        parse_problem(bad)


def test_kind_must_be_state_linear():
    bad = LD_FILE.replace("kind state-linear", "kind nonlinear")
    with pytest.raises(ProblemFileError, match="state-linear"):
        parse_problem(bad)


def test_expression_language():
    expr = parse_expression("2*t^3 - t/2 + exp(2*t)", {"t"})
    t = 0.7
    assert expr.eval({"t": t}) == pytest.approx(2 * t ** 3 - t / 2 + np.exp(2 * t))
    dexpr = expr.diff("t")
    assert dexpr.eval({"t": t}) == pytest.approx(6 * t ** 2 - 0.5 + 2 * np.exp(2 * t))


def test_value_function_file_matches_registry():
    vf = textwrap.dedent("""\
        value-function
        dims n = 1
        piece 2 3
        eta[0] = (2*exp(4 - t) - 2*exp(t - 2))/(exp(2) + 1)
        c = (4*exp(2)*(t - 3) + 5*(exp(2*t - 4) - exp(8 - 2*t)))/(2*(exp(2) + 1)^2)
        """)
    S = parse_value_function(vf)
    S0 = make_d_value_function()
    for t in (2.0, 2.4, 2.9):
        for x in (0.6, 1.0):
            assert S.value(t, [x]) == pytest.approx(S0.value(t, [x]), abs=1e-12)
            assert S.dt(t, [x]) == pytest.approx(S0.dt(t, [x]), abs=1e-12)
            assert S.dx(t, [x])[0] == pytest.approx(S0.dx(t, [x])[0], abs=1e-12)

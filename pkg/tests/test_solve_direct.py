import numpy as np
import pytest

from retard_oc.dde import IntegratorConfig
from retard_oc.problems import as_delayed
from retard_oc.registry import (D_COST, d_control_value, ld_control_value,
                                make_zero_problem)
from retard_oc.solve import (TranscriptionConfig, _euler_forward,
                             discrete_adjoint_gradient, solve_direct_euler)

FAST = IntegratorConfig(substeps_per_cell=16)


@pytest.fixture(scope="module")
def ld_direct(ld_problem):
    cfg = TranscriptionConfig(n_steps=2000, max_iterations=200, grad_tol=1e-9)
    return solve_direct_euler(ld_problem, cfg, FAST)


def test_direct_benchmark_cost(ld_direct):
    assert ld_direct.converged
    assert abs(ld_direct.cost - 67.491786) <= 1e-2


def test_direct_benchmark_control(ld_direct):
    sup = max(abs(ld_direct.control.eval(t)[0] - ld_control_value(t))
              for t in np.linspace(0.0, 4.0, 4001))
    assert sup <= 5e-3


def test_accepted_costs_monotone(ld_direct):
    costs = [rec["cost"] for rec in ld_direct.history]
    assert all(b <= a + 1e-12 for a, b in zip(costs, costs[1:]))


def test_direct_nonlinear_benchmark(d_problem):
    sol = solve_direct_euler(
        d_problem, TranscriptionConfig(n_steps=1500, max_iterations=200,
                                       grad_tol=1e-9), FAST)
    assert abs(sol.cost - D_COST) <= 1e-2
    for t in np.linspace(0.0, 1.0, 500):
        assert abs(sol.control.eval(t)[0] - d_control_value(t)) <= 1e-2
    for t in np.linspace(1.001, 3.0, 500):
        assert abs(sol.control.eval(t)[0]) <= 1e-2


def test_zero_cost_problem_stops_at_start():
    sol = solve_direct_euler(make_zero_problem(),
                             TranscriptionConfig(n_steps=50, grad_tol=1e-12),
                             FAST)
    assert sol.converged
    assert sol.iterations == 1
    assert sol.discrete_objective == 0.0
    np.testing.assert_array_equal(sol.control_samples, 0.0)


def test_grid_must_align_with_lattice(ld_problem):
    with pytest.raises(ValueError):
        solve_direct_euler(ld_problem, TranscriptionConfig(n_steps=250), FAST)


@pytest.mark.parametrize("which", ["ld", "d"])
def test_gradient_matches_finite_differences(which, ld_problem, d_problem, rng):
    problem = as_delayed(ld_problem if which == "ld" else d_problem)
    steps = 200 if which == "ld" else 150
    cfg = TranscriptionConfig(n_steps=steps)
    u = rng.uniform(-0.5, 0.5, size=(steps, 1))
    grad = discrete_adjoint_gradient(problem, u, cfg)
    for j in rng.choice(steps, size=20, replace=False):
        eps = 1e-3 * (1.0 + abs(u[j, 0]))
        up = u.copy(); up[j, 0] += eps
        um = u.copy(); um[j, 0] -= eps
        fd = (_euler_forward(problem, cfg, up)[1]
              - _euler_forward(problem, cfg, um)[1]) / (2.0 * eps)
        assert abs(fd - grad[j, 0]) <= 1e-6 * max(abs(fd), 1e-9)


def test_gradient_zero_for_zero_cost():
    problem = make_zero_problem()
    u = np.full((40, 1), 0.37)
    grad = discrete_adjoint_gradient(problem, u, TranscriptionConfig(n_steps=40))
    np.testing.assert_array_equal(grad, 0.0)


def test_stationarity_at_converged_solution(ld_problem, ld_direct):
    grad = discrete_adjoint_gradient(as_delayed(ld_problem),
                                     ld_direct.control_samples,
                                     TranscriptionConfig(n_steps=2000))
    assert float(np.max(np.abs(grad))) <= 1e-6


def test_discrete_and_quadrature_costs_converge(ld_problem):
    gaps = []
    for steps in (500, 1000):
        sol = solve_direct_euler(
            ld_problem, TranscriptionConfig(n_steps=steps, grad_tol=1e-9), FAST)
        gaps.append(abs(sol.discrete_objective - sol.cost))
    assert gaps[1] < gaps[0]          # O(delta) gap shrinks with refinement
    assert gaps[1] < 0.5 * gaps[0] * 1.2


def test_refinement_toward_benchmark_cost(ld_problem):
    gaps = []
    for steps in (252, 500, 1000, 2000):
        sol = solve_direct_euler(
            ld_problem, TranscriptionConfig(n_steps=steps, grad_tol=1e-9), FAST)
        gaps.append(abs(sol.cost - 67.491786))
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_box_constrained_solution_respects_bounds(ld_problem):
    from dataclasses import replace

    from retard_oc.problems import ControlSet
    boxed = replace(ld_problem, control_set=ControlSet.box([-0.02], [0.02]))
    sol = solve_direct_euler(boxed,
                             TranscriptionConfig(n_steps=400, grad_tol=1e-8),
                             FAST)
    assert np.max(sol.control_samples) <= 0.02 + 1e-12
    assert np.min(sol.control_samples) >= -0.02 - 1e-12
    # tighter admissible set cannot beat the unconstrained optimum
    assert sol.discrete_objective > 67.0


def test_iteration_cap_raises_with_best_attached(ld_problem):
    from retard_oc.errors import NoConvergenceError
    with pytest.raises(NoConvergenceError) as err:
        solve_direct_euler(ld_problem,
                           TranscriptionConfig(n_steps=400, max_iterations=1,
                                               grad_tol=1e-16), FAST)
    assert err.value.best is not None
    assert np.isfinite(err.value.best.cost)
    assert err.value.diagnostics["history"]


def test_line_search_reports_unbounded_descent():
    from dataclasses import replace

    from retard_oc.errors import UnboundedDescentError
    from retard_oc.registry import make_zero_problem

    # finite cost only at the initial point, with a declared nonzero gradient:
    # every trial step lands on NaN, so no finite decrease exists
    base = make_zero_problem()
    trap = replace(
        base,
        f0=lambda t, x, y, u, v: 0.0 if abs(float(u[0])) < 1e-300 else float("nan"),
        f0_dx=lambda t, x, y, u, v: np.zeros(1),
        f0_dy=lambda t, x, y, u, v: np.zeros(1),
        f0_du=lambda t, x, y, u, v: np.ones(1),
        f0_dv=lambda t, x, y, u, v: np.zeros(1),
        f_dx=lambda t, x, y, u, v: np.zeros((1, 1)),
        f_dy=lambda t, x, y, u, v: np.zeros((1, 1)),
        f_du=lambda t, x, y, u, v: np.zeros((1, 1)),
        f_dv=lambda t, x, y, u, v: np.zeros((1, 1)))
    with pytest.raises(UnboundedDescentError):
        solve_direct_euler(trap, TranscriptionConfig(n_steps=40, grad_tol=1e-12),
                           FAST)

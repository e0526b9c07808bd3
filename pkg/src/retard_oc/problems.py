"""Problem definitions for the two delayed optimal control classes.

Both classes share the five-argument conventions

    dynamics(t, x, y, u, v)      y = x(t - r), v = u(t - s)
    running_cost(t, x, y, u, v)

so integrators, quadrature and solvers treat them uniformly.  The
state-linear class pins the structure

    xdot = A(t) x + A_D(t) x(t-r) + g(t, u(t)) + g_D(t, u(t-s))
    running cost = f0x(t, x, x(t-r)) + f0u(t, u, u(t-s))

that the linear sufficiency theorem requires.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .lattice import CommensurabilityLattice, Rational, as_rational, make_lattice
from .trajectory import Trajectory

Vec = np.ndarray
Mat = np.ndarray


# -- admissible sets ----------------------------------------------------------

@dataclass(frozen=True)
class ControlSet:
    """Admissible control values: all of R^m or an axis-aligned box."""

    m: int
    lo: Optional[Vec] = None
    hi: Optional[Vec] = None

    @staticmethod
    def free(m: int) -> "ControlSet":
        return ControlSet(m=m)

    @staticmethod
    def box(lo, hi) -> "ControlSet":
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("invalid box bounds")
        return ControlSet(m=len(lo), lo=lo, hi=hi)

    @property
    def is_free(self) -> bool:
        return self.lo is None

    def project(self, u: Vec) -> Vec:
        u = np.asarray(u, dtype=float).reshape(self.m)
        if self.is_free:
            return u
        return np.clip(u, self.lo, self.hi)

    def contains(self, u: Vec, tol: float = 1e-12) -> bool:
        if self.is_free:
            return True
        u = np.asarray(u, dtype=float).reshape(self.m)
        return bool(np.all(u >= self.lo - tol) and np.all(u <= self.hi + tol))

    def sample(self, rng: np.random.Generator, center: Vec) -> Vec:
        """Random probe point, used by the maximality checker."""
        center = np.asarray(center, dtype=float).reshape(self.m)
        if self.is_free:
            return center + rng.normal(size=self.m) * (1.0 + np.abs(center))
        return rng.uniform(self.lo, self.hi)


@dataclass(frozen=True)
class TerminalSet:
    """Terminal constraint: free (all of R^n) or a single fixed point."""

    n: int
    point: Optional[Vec] = None

    @staticmethod
    def free(n: int) -> "TerminalSet":
        return TerminalSet(n=n)

    @staticmethod
    def fixed(point) -> "TerminalSet":
        point = np.atleast_1d(np.asarray(point, dtype=float))
        return TerminalSet(n=len(point), point=point)

    @property
    def is_free(self) -> bool:
        return self.point is None

    def contains(self, x: Vec, tol: float = 1e-9) -> bool:
        if self.is_free:
            return True
        return bool(np.max(np.abs(np.asarray(x) - self.point)) <= tol)


def _zero_terminal_cost(x: Vec) -> float:
    return 0.0


# -- problem classes ----------------------------------------------------------

@dataclass(frozen=True)
class DelayedProblem:
    """General nonlinear problem with one state delay r and one control delay s.

    ``phi`` supplies the state history on [a - r - s, a] and ``psi`` the
    control history on [a - s, a[.  Optional analytic partials accelerate the
    adjoint integrator and the discrete adjoint; central finite differences
    are used when they are absent.
    """

    a: Rational
    b: Rational
    r: Rational
    s: Rational
    n: int
    m: int
    f0: Callable[[float, Vec, Vec, Vec, Vec], float]
    f: Callable[[float, Vec, Vec, Vec, Vec], Vec]
    phi: Callable[[float], Vec]
    psi: Callable[[float], Vec]
    g0: Callable[[Vec], float] = _zero_terminal_cost
    control_set: ControlSet = None  # type: ignore[assignment]
    terminal_set: TerminalSet = None  # type: ignore[assignment]
    f_dx: Optional[Callable] = None
    f_dy: Optional[Callable] = None
    f_du: Optional[Callable] = None
    f_dv: Optional[Callable] = None
    f0_dx: Optional[Callable] = None
    f0_dy: Optional[Callable] = None
    f0_du: Optional[Callable] = None
    f0_dv: Optional[Callable] = None
    g0_grad: Optional[Callable[[Vec], Vec]] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "a", as_rational(self.a))
        object.__setattr__(self, "b", as_rational(self.b))
        object.__setattr__(self, "r", as_rational(self.r))
        object.__setattr__(self, "s", as_rational(self.s))
        if self.control_set is None:
            object.__setattr__(self, "control_set", ControlSet.free(self.m))
        if self.terminal_set is None:
            object.__setattr__(self, "terminal_set", TerminalSet.free(self.n))

    # history conventions differ between the two classes
    @property
    def state_history_start(self) -> Rational:
        return self.a - self.r - self.s

    @property
    def control_history_start(self) -> Rational:
        return self.a - self.s

    def lattice(self) -> CommensurabilityLattice:
        return make_lattice(self.a, self.b, self.r, self.s)

    def dynamics(self, t, x, y, u, v) -> Vec:
        return np.asarray(self.f(t, x, y, u, v), dtype=float).reshape(self.n)

    def running_cost(self, t, x, y, u, v) -> float:
        return float(self.f0(t, x, y, u, v))

    def terminal_cost(self, x) -> float:
        return float(self.g0(x))


@dataclass(frozen=True)
class StateLinearProblem:
    """Problem with dynamics linear in the current and delayed state."""

    a: Rational
    b: Rational
    r: Rational
    s: Rational
    n: int
    m: int
    A: Callable[[float], Mat]
    A_D: Callable[[float], Mat]
    g: Callable[[float, Vec], Vec]
    g_D: Callable[[float, Vec], Vec]
    f0x: Callable[[float, Vec, Vec], float]
    f0u: Callable[[float, Vec, Vec], float]
    phi: Callable[[float], Vec]
    psi: Callable[[float], Vec]
    control_set: ControlSet = None  # type: ignore[assignment]
    f0x_dx: Optional[Callable] = None   # d f0x / d x, shape (n,)
    f0x_dy: Optional[Callable] = None   # d f0x / d x(t-r), shape (n,)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "a", as_rational(self.a))
        object.__setattr__(self, "b", as_rational(self.b))
        object.__setattr__(self, "r", as_rational(self.r))
        object.__setattr__(self, "s", as_rational(self.s))
        if self.control_set is None:
            object.__setattr__(self, "control_set", ControlSet.free(self.m))

    @property
    def state_history_start(self) -> Rational:
        return self.a - self.r

    @property
    def control_history_start(self) -> Rational:
        return self.a - self.s

    def lattice(self) -> CommensurabilityLattice:
        return make_lattice(self.a, self.b, self.r, self.s)

    def dynamics(self, t, x, y, u, v) -> Vec:
        t = float(t)
        Amat = np.asarray(self.A(t), dtype=float).reshape(self.n, self.n)
        Dmat = np.asarray(self.A_D(t), dtype=float).reshape(self.n, self.n)
        gu = np.asarray(self.g(t, np.asarray(u, dtype=float)), dtype=float).reshape(self.n)
        gv = np.asarray(self.g_D(t, np.asarray(v, dtype=float)), dtype=float).reshape(self.n)
        return Amat @ np.asarray(x, float) + Dmat @ np.asarray(y, float) + gu + gv

    def running_cost(self, t, x, y, u, v) -> float:
        return float(self.f0x(float(t), x, y)) + float(self.f0u(float(t), u, v))

    def terminal_cost(self, x) -> float:
        return 0.0


AnyProblem = DelayedProblem | StateLinearProblem


def as_delayed(problem: AnyProblem) -> DelayedProblem:
    """View a state-linear problem through the general nonlinear interface.

    The composed dynamics carry exact state Jacobians (A and A_D); control
    partials fall back to finite differences.  Already-general problems pass
    through unchanged.
    """
    if isinstance(problem, DelayedProblem):
        return problem
    p = problem

    def f(t, x, y, u, v):
        return p.dynamics(t, x, y, u, v)

    def f0(t, x, y, u, v):
        return p.running_cost(t, x, y, u, v)

    def f_dx(t, x, y, u, v):
        return np.asarray(p.A(float(t)), dtype=float).reshape(p.n, p.n)

    def f_dy(t, x, y, u, v):
        return np.asarray(p.A_D(float(t)), dtype=float).reshape(p.n, p.n)

    f0_dx = None
    if p.f0x_dx is not None:
        def f0_dx(t, x, y, u, v):  # noqa: F811
            return np.asarray(p.f0x_dx(float(t), x, y), dtype=float).reshape(p.n)

    f0_dy = None
    if p.f0x_dy is not None:
        def f0_dy(t, x, y, u, v):  # noqa: F811
            return np.asarray(p.f0x_dy(float(t), x, y), dtype=float).reshape(p.n)

    return DelayedProblem(
        a=p.a, b=p.b, r=p.r, s=p.s, n=p.n, m=p.m,
        f0=f0, f=f, phi=p.phi, psi=p.psi,
        control_set=p.control_set,
        terminal_set=TerminalSet.free(p.n),
        f_dx=f_dx, f_dy=f_dy, f0_dx=f0_dx, f0_dy=f0_dy,
        name=p.name,
    )


# -- candidate pairs ----------------------------------------------------------

@dataclass
class CandidateSolution:
    """State/control pair sharing the problem's horizon and delays."""

    state: Trajectory
    control: Trajectory
    cost: Optional[float] = None

    def with_cost(self, cost: float) -> "CandidateSolution":
        return CandidateSolution(state=self.state, control=self.control, cost=cost)


def validate_candidate(problem: AnyProblem, cand: CandidateSolution,
                       samples: int = 64) -> None:
    """Spot-check coverage, control admissibility, and terminal membership."""
    if not cand.state.covers(problem.state_history_start, problem.b):
        raise ValueError("state trajectory does not cover the required domain")
    if not cand.control.covers(problem.control_history_start, problem.b):
        raise ValueError("control trajectory does not cover the required domain")
    for t in np.linspace(float(problem.a), float(problem.b), samples):
        if not problem.control_set.contains(cand.control.eval(t), tol=1e-9):
            raise ValueError(f"control leaves the admissible set near t={t}")
    terminal = getattr(problem, "terminal_set", None)
    if terminal is not None and not terminal.contains(cand.state.eval(problem.b),
                                                      tol=1e-6):
        raise ValueError("terminal state misses the terminal set")

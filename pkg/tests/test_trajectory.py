import math
from fractions import Fraction

import numpy as np
import pytest

from retard_oc.errors import OutOfDomainError
from retard_oc.trajectory import (HermiteCurve, Trajectory, eval_delayed,
                                  from_pieces, hermite_from_samples)


def test_eval_delayed_reads_history(ld_candidate):
    # state history is identically 1, so a two-unit shift from t = 1 hits it
    assert eval_delayed(ld_candidate.state, 1.0, 2) == pytest.approx(1.0)


def test_eval_delayed_zero_shift_is_identity(ld_candidate):
    for t in (0.25, 1.5, 3.9):
        np.testing.assert_allclose(
            eval_delayed(ld_candidate.state, t, 0), ld_candidate.state.eval(t))


def test_eval_delayed_control_history(d_candidate):
    assert eval_delayed(d_candidate.control, 1.5, 2)[0] == pytest.approx(0.0)


def test_eval_delayed_out_of_domain(ld_candidate):
    with pytest.raises(OutOfDomainError):
        eval_delayed(ld_candidate.state, 0.0, 3)  # before history start -2


def test_history_lookup_is_exact():
    # values taken from the history segment are the history callable verbatim
    phi = lambda t: np.array([1.0 + 0.5 * t])
    traj = from_pieces(1, [(-2, 0, phi), (0, 1, lambda t: np.array([1.0 + t]))],
                       main_start=0)
    for t in (-2.0, -1.3, -0.0001):
        assert traj.eval(t)[0] == phi(t)[0]


def test_right_segment_owns_breakpoints(ld_candidate):
    # control jumps at t = 0 (history 0, right limit e^3 / 20)
    u0 = ld_candidate.control.eval(0)
    assert u0[0] == pytest.approx(math.exp(3) / 20.0)
    assert ld_candidate.control.eval(-1e-9)[0] == pytest.approx(0.0)


def test_end_belongs_to_last_segment(ld_candidate):
    assert ld_candidate.control.eval(4)[0] == 0.0


def test_segments_must_tile():
    with pytest.raises(ValueError):
        Trajectory(dimension=1, history_start=Fraction(0), main_start=Fraction(0),
                   end=Fraction(2), segments=tuple())
    with pytest.raises(ValueError):
        from_pieces(1, [(0, 1, lambda t: [t]), (  # gap between 1 and 2
            2, 3, lambda t: [t])], main_start=0)


def test_state_continuity_enforced():
    with pytest.raises(ValueError, match="discontinuity"):
        from_pieces(1, [(0, 1, lambda t: [0.0]), (1, 2, lambda t: [1.0])],
                    main_start=0, require_continuity=True)


def test_cell_curve_left_limit_semantics():
    # the curve sliced for [0,1) evaluates the left piece at the shared edge
    traj = from_pieces(1, [(0, 1, lambda t: [t]), (1, 2, lambda t: [5.0])],
                       main_start=0)
    curve = traj.cell_curve(Fraction(0), Fraction(1))
    assert curve(1.0)[0] == pytest.approx(1.0)   # left limit, not the jump value
    assert traj.eval(1.0)[0] == 5.0              # plain eval: right segment owns t=1


def test_hermite_reproduces_cubics():
    ts = np.linspace(0.0, 2.0, 9)
    ys = (ts ** 3 - 2 * ts)[:, None]
    ds = (3 * ts ** 2 - 2)[:, None]
    curve = HermiteCurve(ts, ys, ds)
    for t in np.linspace(0, 2, 101):
        assert curve(t)[0] == pytest.approx(t ** 3 - 2 * t, abs=1e-12)


def test_hermite_from_samples_smooth():
    ts = np.linspace(0.0, 1.0, 65)
    curve = hermite_from_samples(ts, np.sin(3 * ts))
    for t in np.linspace(0, 1, 200):
        assert curve(t)[0] == pytest.approx(math.sin(3 * t), abs=5e-5)


def test_out_of_domain_eval(ld_candidate):
    with pytest.raises(OutOfDomainError):
        ld_candidate.state.eval(4.5)
    with pytest.raises(OutOfDomainError):
        ld_candidate.state.eval(-2.5)

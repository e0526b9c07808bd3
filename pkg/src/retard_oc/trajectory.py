"""Piecewise curves over the time axis, with history segments prepended.

A :class:`Trajectory` tiles [history_start, end] with half-open segments
[t_i, t_{i+1}); the final segment is closed at ``end``.  Jumps therefore sit
at the left endpoint of the following segment, matching piecewise
definitions like "u(t) = 0 on ]3, 4]".  Segment bounds are exact rationals;
only curve evaluation uses floats.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence, Union

import numpy as np

from .errors import OutOfDomainError
from .lattice import Rational, RationalLike, as_rational

TimeLike = Union[float, int, Fraction]

# Relative slack (scaled by the trajectory span) when snapping float query
# times onto exact rational segment boundaries.
_SNAP = 1e-11


class CallableCurve:
    """Closed-form curve wrapping a scalar-time callable returning shape (dim,)."""

    def __init__(self, fn: Callable[[float], object], dim: int):
        self.fn = fn
        self.dim = dim

    def __call__(self, t: float) -> np.ndarray:
        out = np.asarray(self.fn(float(t)), dtype=float)
        return out.reshape(self.dim)


class HermiteCurve:
    """Cubic Hermite interpolant through (ts, ys) with nodal slopes ds.

    Interpolation error is O(delta^4) in the node spacing, matching the
    integrator's accuracy when nodes are stored at half-substep resolution.
    """

    def __init__(self, ts: np.ndarray, ys: np.ndarray, ds: np.ndarray):
        ts = np.asarray(ts, dtype=float)
        ys = np.asarray(ys, dtype=float)
        ds = np.asarray(ds, dtype=float)
        if ts.ndim != 1 or len(ts) < 2:
            raise ValueError("need at least two nodes")
        if ys.shape != (len(ts), ys.shape[1]) or ds.shape != ys.shape:
            raise ValueError("node array shapes disagree")
        if np.any(np.diff(ts) <= 0):
            raise ValueError("node times must increase")
        self.ts = ts
        self.ys = ys
        self.ds = ds
        self.dim = ys.shape[1]

    def __call__(self, t: float) -> np.ndarray:
        ts = self.ts
        t = float(t)
        slack = _SNAP * max(1.0, abs(ts[0]), abs(ts[-1]))
        if t < ts[0] - slack or t > ts[-1] + slack:
            raise OutOfDomainError(f"t={t} outside nodes [{ts[0]}, {ts[-1]}]")
        i = min(max(bisect.bisect_right(ts, t) - 1, 0), len(ts) - 2)
        dt = ts[i + 1] - ts[i]
        theta = min(max((t - ts[i]) / dt, 0.0), 1.0)
        t2 = theta * theta
        t3 = t2 * theta
        h00 = 2 * t3 - 3 * t2 + 1
        h10 = t3 - 2 * t2 + theta
        h01 = -2 * t3 + 3 * t2
        h11 = t3 - t2
        return (h00 * self.ys[i] + h10 * dt * self.ds[i]
                + h01 * self.ys[i + 1] + h11 * dt * self.ds[i + 1])


class Segment(NamedTuple):
    lo: Rational
    hi: Rational
    curve: Callable[[float], np.ndarray]


@dataclass(frozen=True)
class Trajectory:
    """Evaluable piecewise curve on [history_start, end].

    ``main_start`` marks the boundary between prepended history (initial
    data) and the governed part of the curve.  State trajectories are
    continuous across interior joins; control trajectories may jump there.
    """

    dimension: int
    history_start: Rational
    main_start: Rational
    end: Rational
    segments: tuple[Segment, ...]

    def __post_init__(self):
        if not self.segments:
            raise ValueError("trajectory needs at least one segment")
        prev = self.history_start
        for seg in self.segments:
            if seg.lo != prev:
                raise ValueError(f"segments do not tile: gap at {prev} vs {seg.lo}")
            if not seg.lo < seg.hi:
                raise ValueError("empty segment")
            prev = seg.hi
        if prev != self.end:
            raise ValueError(f"segments end at {prev}, expected {self.end}")
        object.__setattr__(self, "_bounds", np.array(
            [float(s.lo) for s in self.segments] + [float(self.end)]))

    # -- evaluation ---------------------------------------------------------

    def _locate(self, t: TimeLike) -> int:
        bounds = self._bounds
        tf = float(t)
        span = max(1.0, bounds[-1] - bounds[0], abs(bounds[0]), abs(bounds[-1]))
        slack = _SNAP * span
        if tf < bounds[0] - slack or tf > bounds[-1] + slack:
            raise OutOfDomainError(
                f"t={t} outside [{self.history_start}, {self.end}]")
        i = bisect.bisect_right(bounds, tf) - 1
        i = min(max(i, 0), len(self.segments) - 1)
        # Snap to the right-owning segment when t sits within float fuzz of a
        # boundary; the last segment keeps ownership of `end`.
        if i + 1 < len(self.segments) and abs(tf - bounds[i + 1]) <= slack:
            i += 1
        return i

    def eval(self, t: TimeLike) -> np.ndarray:
        """Value at time t; the right segment owns each interior breakpoint."""
        return self.segments[self._locate(t)].curve(float(t))

    __call__ = eval

    def covers(self, lo: RationalLike, hi: RationalLike) -> bool:
        return self.history_start <= as_rational(lo) and as_rational(hi) <= self.end

    def segment_for_cell(self, lo: Rational, hi: Rational) -> Segment:
        """Segment containing the open cell (lo, hi); resolved at the midpoint
        so boundary ownership never comes into play."""
        mid = (lo + hi) / 2
        seg = self.segments[self._locate(mid)]
        if not (seg.lo <= lo and hi <= seg.hi):
            raise OutOfDomainError(
                f"cell [{lo}, {hi}] straddles segment [{seg.lo}, {seg.hi}]")
        return seg

    def cell_curve(self, lo: Rational, hi: Rational) -> Callable[[float], np.ndarray]:
        """Curve valid on the closed cell [lo, hi].

        Evaluating it at ``hi`` yields the left limit when a jump sits there,
        which is the a.e.-correct restriction integrators and quadrature need.
        """
        return self.segment_for_cell(lo, hi).curve


def eval_delayed(traj: Trajectory, t: TimeLike, tau: RationalLike) -> np.ndarray:
    """Evaluate ``traj`` at the shifted time t - tau.

    Crosses transparently from the governed part into prepended history.
    Raises :class:`OutOfDomainError` when t - tau precedes the history start.
    """
    tau = as_rational(tau)
    if isinstance(t, Fraction):
        shifted: TimeLike = t - tau
    else:
        shifted = float(t) - float(tau)
    return traj.eval(shifted)


# -- builders ----------------------------------------------------------------

def from_pieces(dimension: int,
                pieces: Sequence[tuple[RationalLike, RationalLike, Callable]],
                main_start: RationalLike,
                require_continuity: bool = False) -> Trajectory:
    """Assemble a trajectory from (lo, hi, fn) pieces in ascending order.

    ``fn`` takes a float time and returns something coercible to shape
    (dimension,).  With ``require_continuity`` adjacent piece values must
    agree at shared endpoints (state-trajectory invariant).
    """
    segs = tuple(Segment(as_rational(lo), as_rational(hi), CallableCurve(fn, dimension))
                 for lo, hi, fn in pieces)
    traj = Trajectory(
        dimension=dimension,
        history_start=segs[0].lo,
        main_start=as_rational(main_start),
        end=segs[-1].hi,
        segments=segs,
    )
    if require_continuity:
        for left, right in zip(segs, segs[1:]):
            t = float(left.hi)
            gap = np.max(np.abs(left.curve(t) - right.curve(t)))
            scale = 1.0 + float(np.max(np.abs(right.curve(t))))
            if gap > 1e-9 * scale:
                raise ValueError(f"discontinuity {gap:.3e} at t={left.hi}")
    return traj


def constant_history(dimension: int, value) -> Callable[[float], np.ndarray]:
    vec = np.broadcast_to(np.asarray(value, dtype=float), (dimension,)).copy()
    return lambda t: vec


def hermite_from_samples(ts: np.ndarray, ys: np.ndarray) -> HermiteCurve:
    """Hermite curve through samples with finite-difference nodal slopes."""
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if ys.ndim == 1:
        ys = ys[:, None]
    ds = np.gradient(ys, ts, axis=0)
    return HermiteCurve(ts, ys, ds)

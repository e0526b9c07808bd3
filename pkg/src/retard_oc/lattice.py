"""Exact rational time lattice shared by delays, breakpoints and indicators.

All switching times in a commensurable delayed problem (delay multiples,
cell boundaries, indicator windows) are integer combinations of a single
grid amplitude h.  Keeping a, b, r, s and h as exact rationals means cell
membership and indicator windows are decided without floating-point ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .errors import IncommensurableDelayError, ZeroDelaysError

#: Exact rational scalar used for every lattice quantity.  Stored in lowest
#: terms with a positive denominator, which ``fractions.Fraction`` guarantees.
Rational = Fraction

RationalLike = Union[Rational, int, str, float]

# Floats are accepted only when they are "clean" dyadic rationals (0.5, 0.25,
# ...).  Anything else (0.1, math.pi) silently means a nearby binary fraction,
# which would defeat the exactness the lattice exists to provide.
_MAX_FLOAT_DENOMINATOR = 2 ** 20


def as_rational(value: RationalLike) -> Rational:
    """Coerce ``value`` to an exact :class:`Rational`.

    Accepts integers, ``Fraction``, strings like ``"2/3"`` or ``"0.5"``, and
    floats whose exact binary value has a small power-of-two denominator.
    Raises :class:`IncommensurableDelayError` otherwise; pass ``"1/10"``
    instead of ``0.1``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise IncommensurableDelayError(f"cannot parse rational {value!r}") from exc
    if isinstance(value, float):
        if not math.isfinite(value):
            raise IncommensurableDelayError(f"non-finite time quantity {value!r}")
        exact = Fraction(value)
        if exact.denominator > _MAX_FLOAT_DENOMINATOR:
            raise IncommensurableDelayError(
                f"float {value!r} is not an exact small rational; "
                f"pass a string such as '1/10' instead"
            )
        return exact
    raise IncommensurableDelayError(f"unsupported time quantity {value!r}")


def rational_gcd(values: Sequence[Rational]) -> Rational:
    """Greatest rational dividing every value: gcd of p_i/q_i over a common
    denominator."""
    if not values:
        raise ValueError("gcd of empty sequence")
    acc = values[0]
    for v in values[1:]:
        acc = Fraction(
            math.gcd(acc.numerator * v.denominator, v.numerator * acc.denominator),
            acc.denominator * v.denominator,
        )
    return acc


@dataclass(frozen=True)
class CommensurabilityLattice:
    """Uniform rational grid on [a, b] whose amplitude divides both delays.

    ``h`` is the gcd of the nonzero members of {r, s, b - a}; every delay
    shift is then an exact integer number of cells.
    """

    a: Rational
    b: Rational
    r: Rational
    s: Rational
    h: Rational
    n_cells: int

    @property
    def breakpoints(self) -> tuple[Rational, ...]:
        return tuple(self.a + i * self.h for i in range(self.n_cells + 1))

    @property
    def state_shift(self) -> int:
        """Number of whole cells spanned by the state delay r."""
        shift = self.r / self.h
        assert shift.denominator == 1
        return int(shift)

    @property
    def control_shift(self) -> int:
        """Number of whole cells spanned by the control delay s."""
        shift = self.s / self.h
        assert shift.denominator == 1
        return int(shift)

    def cell(self, i: int) -> tuple[Rational, Rational]:
        if not 0 <= i < self.n_cells:
            raise IndexError(f"cell {i} outside 0..{self.n_cells - 1}")
        return self.a + i * self.h, self.a + (i + 1) * self.h

    def cells(self):
        for i in range(self.n_cells):
            yield i, self.a + i * self.h, self.a + (i + 1) * self.h


def make_lattice(a: RationalLike, b: RationalLike, r: RationalLike,
                 s: RationalLike) -> CommensurabilityLattice:
    """Build the commensurability lattice for horizon [a, b] and delays r, s.

    Raises :class:`ZeroDelaysError` when r = s = 0 and
    :class:`IncommensurableDelayError` when an input is not an exact rational.
    """
    a = as_rational(a)
    b = as_rational(b)
    r = as_rational(r)
    s = as_rational(s)
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    if r < 0 or s < 0:
        raise ValueError(f"delays must be nonnegative, got r={r}, s={s}")
    if r == 0 and s == 0:
        raise ZeroDelaysError("state and control delays are both zero")
    members = [v for v in (r, s, b - a) if v != 0]
    h = rational_gcd(members)
    n_cells = (b - a) / h
    assert n_cells.denominator == 1
    return CommensurabilityLattice(a=a, b=b, r=r, s=s, h=h, n_cells=int(n_cells))

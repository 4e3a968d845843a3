"""Extended nonnegative reals [0, inf] — the numeric carrier of all masses,
weights, and densities.

Conventions: inf * 0 = 0 and inf * r = inf for r in (0, inf]; r / inf = 0
for finite r; inf / inf is undefined (raises Indeterminate).  Division by
zero follows the calculus' density conventions: a / 0 = inf for a > 0 and
0 / 0 = 0.

Finite values are exact Fractions whenever they are built from ints,
Fractions, or other exact values; a float operand makes the result a
float.  Exactness is what the discrete and interval code paths rely on
for bit-exact theorem tests.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import Indeterminate, NumericDomain

_EXACT_TYPES = (int, Fraction)


def _coerce(x):
    """Return a Fraction, float, or None (= inf) for a raw numeric input."""
    if isinstance(x, ExtReal):
        return x.v
    if isinstance(x, bool):
        raise NumericDomain("booleans are not extended reals")
    if isinstance(x, _EXACT_TYPES):
        if x < 0:
            raise NumericDomain(f"negative value {x} is not in [0, inf]")
        return Fraction(x)
    if isinstance(x, float):
        if math.isnan(x):
            raise NumericDomain("NaN is not in [0, inf]")
        if x == math.inf:
            return None
        if x < 0:
            raise NumericDomain(f"negative value {x} is not in [0, inf]")
        return x
    raise NumericDomain(f"cannot interpret {x!r} as an extended real")


class ExtReal:
    """An element of [0, inf].  Immutable; `v` is Fraction, float, or None
    with None standing for inf."""

    __slots__ = ("v",)

    def __init__(self, value):
        if value is None:
            object.__setattr__(self, "v", None)
        else:
            object.__setattr__(self, "v", _coerce(value))

    def __setattr__(self, name, value):  # pragma: no cover - immutability
        raise AttributeError("ExtReal is immutable")

    # -- predicates ------------------------------------------------------

    @property
    def is_inf(self) -> bool:
        return self.v is None

    @property
    def is_zero(self) -> bool:
        return self.v == 0

    @property
    def is_exact(self) -> bool:
        """True when the value is inf or an exact rational."""
        return self.v is None or isinstance(self.v, Fraction)

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other) -> "ExtReal":
        other = as_ext(other)
        if self.is_inf or other.is_inf:
            return INF
        return ExtReal(self.v + other.v)

    __radd__ = __add__

    def __mul__(self, other) -> "ExtReal":
        other = as_ext(other)
        if self.is_inf:
            return ZERO if other.is_zero else INF
        if other.is_inf:
            return ZERO if self.is_zero else INF
        return ExtReal(self.v * other.v)

    __rmul__ = __mul__

    def div(self, other) -> "ExtReal":
        """Quotient with a/0 = inf (a > 0), 0/0 = 0, r/inf = 0; inf/inf
        raises Indeterminate."""
        other = as_ext(other)
        if self.is_inf and other.is_inf:
            raise Indeterminate("inf / inf is undefined")
        if other.is_inf:
            return ZERO
        if self.is_inf:
            return INF
        if other.v == 0:
            return ZERO if self.v == 0 else INF
        return ExtReal(self.v / other.v)

    # -- order -----------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, (ExtReal, int, float, Fraction)):
            return NotImplemented
        other = as_ext(other)
        if self.is_inf or other.is_inf:
            return self.is_inf and other.is_inf
        return self.v == other.v

    def __lt__(self, other):
        other = as_ext(other)
        if self.is_inf:
            return False
        if other.is_inf:
            return True
        return self.v < other.v

    def __le__(self, other):
        other = as_ext(other)
        return self == other or self < other

    def __gt__(self, other):
        return not self <= as_ext(other)

    def __ge__(self, other):
        return not self < as_ext(other)

    def __hash__(self):
        if self.is_inf:
            return hash(math.inf)
        return hash(self.v)

    # -- conversion ------------------------------------------------------

    def __float__(self) -> float:
        return math.inf if self.is_inf else float(self.v)

    def __repr__(self):
        if self.is_inf:
            return "ExtReal(inf)"
        return f"ExtReal({self.v})"

    def __str__(self):
        if self.is_inf:
            return "inf"
        if isinstance(self.v, Fraction) and self.v.denominator == 1:
            return str(self.v.numerator)
        return str(self.v)


INF = ExtReal(None)
ZERO = ExtReal(0)
ONE = ExtReal(1)


def as_ext(x) -> ExtReal:
    """Coerce ints, Fractions, floats (inf allowed), or ExtReals."""
    if isinstance(x, ExtReal):
        return x
    return ExtReal(x)


def ext_mul(a, b) -> ExtReal:
    """Product under the inf * 0 = 0 convention."""
    return as_ext(a) * as_ext(b)


def ext_add(a, b) -> ExtReal:
    return as_ext(a) + as_ext(b)


def ext_div(a, b) -> ExtReal:
    """Quotient; raises Indeterminate on inf/inf."""
    return as_ext(a).div(b)


def ext_sum(values) -> ExtReal:
    total = ZERO
    for v in values:
        total = total + as_ext(v)
    return total


def rn_div(a, b) -> ExtReal:
    """Total division used inside derivative terms: like ext_div but
    inf/inf = 1, the canonical choice on matched infinity regions."""
    a, b = as_ext(a), as_ext(b)
    if a.is_inf and b.is_inf:
        return ONE
    return a.div(b)

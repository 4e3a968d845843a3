"""Measurable-space terms and their points.

Every SpaceExpr denotes a standard Borel space: the unit space, a finite
labelled space, the naturals, the reals, and binary products and sums
(n-ary by nesting).  Points are plain Python values shaped by the space:

    Unit        ()
    Fin         one of the declared labels (str)
    Nat         nonnegative int
    Real        int / float / Fraction (ints and Fractions are the exact path)
    Prod(a, b)  2-tuple of points
    Sum(a, b)   Inl(point) / Inr(point)

BOTTOM is the absent value produced by partial functions; it belongs to
no space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import TypeMismatch


class SpaceExpr:
    __slots__ = ()


@dataclass(frozen=True)
class Unit(SpaceExpr):
    def __repr__(self):
        return "Unit"


@dataclass(frozen=True)
class Fin(SpaceExpr):
    labels: tuple

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise TypeMismatch(f"Fin labels must be distinct: {self.labels}")
        if not self.labels:
            raise TypeMismatch("Fin requires at least one label")
        object.__setattr__(self, "labels", tuple(self.labels))

    def __repr__(self):
        return f"Fin{self.labels!r}"


@dataclass(frozen=True)
class Nat(SpaceExpr):
    def __repr__(self):
        return "Nat"


@dataclass(frozen=True)
class Real(SpaceExpr):
    def __repr__(self):
        return "Real"


@dataclass(frozen=True)
class Prod(SpaceExpr):
    left: SpaceExpr
    right: SpaceExpr

    def __repr__(self):
        return f"({self.left!r} * {self.right!r})"


@dataclass(frozen=True)
class Sum(SpaceExpr):
    left: SpaceExpr
    right: SpaceExpr

    def __repr__(self):
        return f"({self.left!r} + {self.right!r})"


UNIT = Unit()
NAT = Nat()
REAL = Real()


class _ExtRealCod:
    """Codomain marker for [0, inf]-valued function terms (densities and
    scores).  Not a SpaceExpr: no sets or measures live on it."""

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "[0,inf]"


EXTREAL = _ExtRealCod()


class _Bottom:
    """The absent value of partial functions."""

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "BOTTOM"

    def __bool__(self):
        return False


BOTTOM = _Bottom()


@dataclass(frozen=True)
class Inl:
    value: object

    def __repr__(self):
        return f"Inl({self.value!r})"


@dataclass(frozen=True)
class Inr:
    value: object

    def __repr__(self):
        return f"Inr({self.value!r})"


def is_real_value(p) -> bool:
    if isinstance(p, bool):
        return False
    if isinstance(p, (int, Fraction)):
        return True
    return isinstance(p, float) and math.isfinite(p)


def point_in_space(p, space: SpaceExpr) -> bool:
    """Decide whether p is a point of the given space."""
    if p is BOTTOM:
        return False
    if isinstance(space, Unit):
        return p == ()
    if isinstance(space, Fin):
        return p in space.labels
    if isinstance(space, Nat):
        return isinstance(p, int) and not isinstance(p, bool) and p >= 0
    if isinstance(space, Real):
        return is_real_value(p)
    if isinstance(space, Prod):
        return (
            isinstance(p, tuple)
            and len(p) == 2
            and point_in_space(p[0], space.left)
            and point_in_space(p[1], space.right)
        )
    if isinstance(space, Sum):
        if isinstance(p, Inl):
            return point_in_space(p.value, space.left)
        if isinstance(p, Inr):
            return point_in_space(p.value, space.right)
        return False
    raise TypeMismatch(f"not a space: {space!r}")


def check_point(p, space: SpaceExpr):
    if not point_in_space(p, space):
        raise TypeMismatch(f"point {p!r} does not fit space {space!r}")
    return p


def is_discrete(space: SpaceExpr) -> bool:
    """True for spaces whose every subset is (representably) measurable."""
    if isinstance(space, (Unit, Fin, Nat)):
        return True
    if isinstance(space, (Prod, Sum)):
        return is_discrete(space.left) and is_discrete(space.right)
    return False


def is_finite_space(space: SpaceExpr) -> bool:
    if isinstance(space, (Unit, Fin)):
        return True
    if isinstance(space, (Prod, Sum)):
        return is_finite_space(space.left) and is_finite_space(space.right)
    return False


def enumerate_points(space: SpaceExpr):
    """All points of a finite space, in a fixed order."""
    if isinstance(space, Unit):
        return [()]
    if isinstance(space, Fin):
        return list(space.labels)
    if isinstance(space, Prod):
        return [
            (a, b)
            for a in enumerate_points(space.left)
            for b in enumerate_points(space.right)
        ]
    if isinstance(space, Sum):
        return [Inl(a) for a in enumerate_points(space.left)] + [
            Inr(b) for b in enumerate_points(space.right)
        ]
    raise TypeMismatch(f"cannot enumerate points of {space!r}")

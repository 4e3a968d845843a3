"""Measurable (partial) function terms.

Every FnExpr denotes a measurable partial function by construction: the
grammar closes measurable functions under pairing, case split, composition,
real arithmetic, indicator/restriction/piecewise combinators, and a small
family of named density combinators.  Evaluation is a total procedure: it
returns a point, BOTTOM (semantic partiality, e.g. outside a RestrictTo),
or raises NumericDomain (a diagnostic, e.g. log of a negative real).

A structured sub-language (identities, constants, projections, pairs,
injections, case splits, indicators, restrictions, floor, affine maps,
monotone reals, and their compositions) additionally supports exact
preimage computation; everything else raises Unsupported and callers fall
back to numeric methods.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import NumericDomain, TypeMismatch, Unsupported
from .extreal import INF, ONE, ZERO, ExtReal, as_ext, rn_div
from .sets import (
    EmptySet,
    FullSet,
    Interval,
    NatSet,
    RealSet,
    SetExpr,
    complement,
    difference,
    intersect,
    interval,
    member,
    nat_set,
    prod_set,
    real_set,
    sum_set,
    union,
    union_all,
    NEG_INF,
    POS_INF,
)
from .spaces import (
    BOTTOM,
    EXTREAL,
    NAT,
    REAL,
    Inl,
    Inr,
    Nat,
    Prod,
    Real,
    SpaceExpr,
    Sum,
    check_point,
)

SQRT_2PI = math.sqrt(2.0 * math.pi)


def as_weight(v) -> ExtReal:
    """Coerce an evaluation result to a weight in [0, inf].

    BOTTOM maps to 0 (a partial density kills mass, matching the zero
    measure assigned at absent values); negative reals are diagnostics.
    """
    if v is BOTTOM:
        return ZERO
    if isinstance(v, ExtReal):
        return v
    if isinstance(v, bool) or not isinstance(v, (int, float, Fraction)):
        raise NumericDomain(f"{v!r} is not a weight")
    if v < 0:
        raise NumericDomain(f"negative weight {v!r}")
    return as_ext(v)


def _same_space(a, b, what):
    if a != b:
        raise TypeMismatch(f"{what}: {a!r} vs {b!r}")


def _num(v, what):
    if isinstance(v, bool) or not isinstance(v, (int, float, Fraction)):
        raise TypeMismatch(f"{what} expected a real, got {v!r}")
    return v


class FnExpr:
    __slots__ = ()

    dom: object
    cod: object

    def _eval(self, p):
        raise NotImplementedError

    def _preimage(self, s: SetExpr) -> SetExpr:
        raise Unsupported(f"{type(self).__name__} is outside the preimage sub-language")


def eval_fn(f: FnExpr, p):
    """Apply the denoted function; returns a point, an ExtReal (for
    [0,inf]-valued terms), or BOTTOM."""
    check_point(p, f.dom)
    return f._eval(p)


def preimage(f: FnExpr, s: SetExpr) -> SetExpr:
    """Exact preimage f^{-1}(s) on the structured sub-language."""
    if f.cod is EXTREAL:
        raise Unsupported("preimage of a [0,inf]-valued term")
    if s.space != f.cod:
        raise TypeMismatch(f"set on {s.space!r} vs codomain {f.cod!r}")
    return f._preimage(s)


# ---------------------------------------------------------------------------
# core structural combinators


@dataclass(frozen=True)
class Id(FnExpr):
    space: SpaceExpr

    @property
    def dom(self):
        return self.space

    @property
    def cod(self):
        return self.space

    def _eval(self, p):
        return p

    def _preimage(self, s):
        return s


@dataclass(frozen=True)
class Const(FnExpr):
    _dom: SpaceExpr
    value: object
    _cod: object

    def __post_init__(self):
        cod = self._cod
        if cod is EXTREAL:
            object.__setattr__(self, "value", as_ext(self.value))
        else:
            check_point(self.value, cod)

    @property
    def dom(self):
        return self._dom

    @property
    def cod(self):
        return self._cod

    def _eval(self, p):
        return self.value

    def _preimage(self, s):
        if member(s, self.value):
            return FullSet(self._dom)
        return EmptySet(self._dom)


def const(dom, value, cod) -> Const:
    return Const(dom, value, cod)


def const_real(dom, value) -> Const:
    return Const(dom, value, REAL)


@dataclass(frozen=True)
class Proj1(FnExpr):
    _dom: Prod

    @property
    def dom(self):
        return self._dom

    @property
    def cod(self):
        return self._dom.left

    def _eval(self, p):
        return p[0]

    def _preimage(self, s):
        return prod_set(self._dom, [(s, FullSet(self._dom.right))])


@dataclass(frozen=True)
class Proj2(FnExpr):
    _dom: Prod

    @property
    def dom(self):
        return self._dom

    @property
    def cod(self):
        return self._dom.right

    def _eval(self, p):
        return p[1]

    def _preimage(self, s):
        return prod_set(self._dom, [(FullSet(self._dom.left), s)])


@dataclass(frozen=True)
class PairFn(FnExpr):
    first: FnExpr
    second: FnExpr

    def __post_init__(self):
        _same_space(self.first.dom, self.second.dom, "Pair components' domain")
        if self.first.cod is EXTREAL or self.second.cod is EXTREAL:
            raise TypeMismatch("Pair components must land in spaces")

    @property
    def dom(self):
        return self.first.dom

    @property
    def cod(self):
        return Prod(self.first.cod, self.second.cod)

    def _eval(self, p):
        a = self.first._eval(p)
        if a is BOTTOM:
            return BOTTOM
        b = self.second._eval(p)
        if b is BOTTOM:
            return BOTTOM
        return (a, b)

    def _preimage(self, s):
        if isinstance(s, EmptySet):
            return EmptySet(self.dom)
        if isinstance(s, FullSet):
            rects = [(FullSet(self.first.cod), FullSet(self.second.cod))]
        else:
            rects = s.rects
        parts = [
            intersect(self.first._preimage(a), self.second._preimage(b))
            for a, b in rects
        ]
        return union_all(parts, self.dom)


@dataclass(frozen=True)
class InjL(FnExpr):
    _dom: SpaceExpr
    other: SpaceExpr

    @property
    def dom(self):
        return self._dom

    @property
    def cod(self):
        return Sum(self._dom, self.other)

    def _eval(self, p):
        return Inl(p)

    def _preimage(self, s):
        if isinstance(s, EmptySet):
            return EmptySet(self._dom)
        if isinstance(s, FullSet):
            return FullSet(self._dom)
        return s.left


@dataclass(frozen=True)
class InjR(FnExpr):
    other: SpaceExpr
    _dom: SpaceExpr

    @property
    def dom(self):
        return self._dom

    @property
    def cod(self):
        return Sum(self.other, self._dom)

    def _eval(self, p):
        return Inr(p)

    def _preimage(self, s):
        if isinstance(s, EmptySet):
            return EmptySet(self._dom)
        if isinstance(s, FullSet):
            return FullSet(self._dom)
        return s.right


@dataclass(frozen=True)
class CaseFn(FnExpr):
    on_left: FnExpr
    on_right: FnExpr

    def __post_init__(self):
        if self.on_left.cod != self.on_right.cod:
            raise TypeMismatch("Case branches must share a codomain")

    @property
    def dom(self):
        return Sum(self.on_left.dom, self.on_right.dom)

    @property
    def cod(self):
        return self.on_left.cod

    def _eval(self, p):
        if isinstance(p, Inl):
            return self.on_left._eval(p.value)
        return self.on_right._eval(p.value)

    def _preimage(self, s):
        return sum_set(
            self.dom, self.on_left._preimage(s), self.on_right._preimage(s)
        )


@dataclass(frozen=True)
class Compose(FnExpr):
    """outer after inner: p |-> outer(inner(p))."""

    outer: FnExpr
    inner: FnExpr

    def __post_init__(self):
        if self.inner.cod is EXTREAL or self.inner.cod != self.outer.dom:
            raise TypeMismatch(
                f"cannot compose: inner codomain {self.inner.cod!r}, "
                f"outer domain {self.outer.dom!r}"
            )

    @property
    def dom(self):
        return self.inner.dom

    @property
    def cod(self):
        return self.outer.cod

    def _eval(self, p):
        q = self.inner._eval(p)
        if q is BOTTOM:
            return BOTTOM
        return self.outer._eval(q)

    def _preimage(self, s):
        return self.inner._preimage(self.outer._preimage(s))


# ---------------------------------------------------------------------------
# set-driven combinators


@dataclass(frozen=True)
class Indicator(FnExpr):
    """1 on the set, 0 off it; real-valued so it can appear both in
    arithmetic and as an If guard."""

    set_expr: SetExpr

    @property
    def dom(self):
        return self.set_expr.space

    @property
    def cod(self):
        return REAL

    def _eval(self, p):
        return 1 if member(self.set_expr, p) else 0

    def _preimage(self, s):
        one_in = member(s, 1)
        zero_in = member(s, 0)
        if one_in and zero_in:
            return FullSet(self.dom)
        if one_in:
            return self.set_expr
        if zero_in:
            return complement(self.set_expr)
        return EmptySet(self.dom)


@dataclass(frozen=True)
class RestrictTo(FnExpr):
    """Identity on the set, BOTTOM outside it."""

    set_expr: SetExpr

    @property
    def dom(self):
        return self.set_expr.space

    @property
    def cod(self):
        return self.set_expr.space

    def _eval(self, p):
        return p if member(self.set_expr, p) else BOTTOM

    def _preimage(self, s):
        return intersect(s, self.set_expr)


@dataclass(frozen=True)
class IfSet(FnExpr):
    cond: SetExpr
    then_fn: FnExpr
    else_fn: FnExpr

    def __post_init__(self):
        _same_space(self.cond.space, self.then_fn.dom, "IfSet condition/branch domain")
        _same_space(self.then_fn.dom, self.else_fn.dom, "IfSet branch domains")
        if self.then_fn.cod != self.else_fn.cod:
            raise TypeMismatch("IfSet branches must share a codomain")

    @property
    def dom(self):
        return self.then_fn.dom

    @property
    def cod(self):
        return self.then_fn.cod

    def _eval(self, p):
        if member(self.cond, p):
            return self.then_fn._eval(p)
        return self.else_fn._eval(p)

    def _preimage(self, s):
        a = intersect(self.cond, self.then_fn._preimage(s))
        b = intersect(complement(self.cond), self.else_fn._preimage(s))
        return union(a, b)


# ---------------------------------------------------------------------------
# real arithmetic


class _RealFn(FnExpr):
    """Base for real-valued arithmetic with real-valued operands."""

    __slots__ = ()

    @property
    def cod(self):
        return REAL


def _check_real_operand(f, what):
    if f.cod != REAL:
        raise TypeMismatch(f"{what} needs a real-valued operand, got {f.cod!r}")


@dataclass(frozen=True)
class Add(_RealFn):
    left: FnExpr
    right: FnExpr

    def __post_init__(self):
        _check_real_operand(self.left, "Add")
        _check_real_operand(self.right, "Add")
        _same_space(self.left.dom, self.right.dom, "Add operand domains")

    @property
    def dom(self):
        return self.left.dom

    def _eval(self, p):
        a = self.left._eval(p)
        if a is BOTTOM:
            return BOTTOM
        b = self.right._eval(p)
        if b is BOTTOM:
            return BOTTOM
        return _num(a, "Add") + _num(b, "Add")

    def _preimage(self, s):
        return _affine_preimage(self, s)


@dataclass(frozen=True)
class Sub(_RealFn):
    left: FnExpr
    right: FnExpr

    def __post_init__(self):
        _check_real_operand(self.left, "Sub")
        _check_real_operand(self.right, "Sub")
        _same_space(self.left.dom, self.right.dom, "Sub operand domains")

    @property
    def dom(self):
        return self.left.dom

    def _eval(self, p):
        a = self.left._eval(p)
        if a is BOTTOM:
            return BOTTOM
        b = self.right._eval(p)
        if b is BOTTOM:
            return BOTTOM
        return _num(a, "Sub") - _num(b, "Sub")

    def _preimage(self, s):
        return _affine_preimage(self, s)


@dataclass(frozen=True)
class Mul(_RealFn):
    left: FnExpr
    right: FnExpr

    def __post_init__(self):
        _check_real_operand(self.left, "Mul")
        _check_real_operand(self.right, "Mul")
        _same_space(self.left.dom, self.right.dom, "Mul operand domains")

    @property
    def dom(self):
        return self.left.dom

    def _eval(self, p):
        a = self.left._eval(p)
        if a is BOTTOM:
            return BOTTOM
        b = self.right._eval(p)
        if b is BOTTOM:
            return BOTTOM
        return _num(a, "Mul") * _num(b, "Mul")

    def _preimage(self, s):
        return _affine_preimage(self, s)


@dataclass(frozen=True)
class SafeDiv(_RealFn):
    """Real division with x/0 = 0 (total; distinct from ExtReal division)."""

    left: FnExpr
    right: FnExpr

    def __post_init__(self):
        _check_real_operand(self.left, "SafeDiv")
        _check_real_operand(self.right, "SafeDiv")
        _same_space(self.left.dom, self.right.dom, "SafeDiv operand domains")

    @property
    def dom(self):
        return self.left.dom

    def _eval(self, p):
        a = self.left._eval(p)
        if a is BOTTOM:
            return BOTTOM
        b = self.right._eval(p)
        if b is BOTTOM:
            return BOTTOM
        b = _num(b, "SafeDiv")
        if b == 0:
            return 0
        a = _num(a, "SafeDiv")
        if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
            return Fraction(a) / Fraction(b)
        return a / b


@dataclass(frozen=True)
class Neg(_RealFn):
    operand: FnExpr

    def __post_init__(self):
        _check_real_operand(self.operand, "Neg")

    @property
    def dom(self):
        return self.operand.dom

    def _eval(self, p):
        a = self.operand._eval(p)
        if a is BOTTOM:
            return BOTTOM
        return -_num(a, "Neg")

    def _preimage(self, s):
        return _affine_preimage(self, s)


@dataclass(frozen=True)
class AbsF(_RealFn):
    operand: FnExpr

    def __post_init__(self):
        _check_real_operand(self.operand, "Abs")

    @property
    def dom(self):
        return self.operand.dom

    def _eval(self, p):
        a = self.operand._eval(p)
        if a is BOTTOM:
            return BOTTOM
        return abs(_num(a, "Abs"))

    def _preimage(self, s):
        # |x| in s  <=>  x in s interval-reflected around 0
        pos = intersect(s, interval(0, POS_INF, True, False))
        refl = _transform_monotone(pos, lambda v: -v, decreasing=True)
        return self.operand._preimage(union(pos, refl))


@dataclass(frozen=True)
class FloorF(_RealFn):
    operand: FnExpr

    def __post_init__(self):
        _check_real_operand(self.operand, "Floor")

    @property
    def dom(self):
        return self.operand.dom

    def _eval(self, p):
        a = self.operand._eval(p)
        if a is BOTTOM:
            return BOTTOM
        return math.floor(_num(a, "Floor"))

    def _preimage(self, s):
        return self.operand._preimage(_floor_preimage(s))


@dataclass(frozen=True)
class ExpF(_RealFn):
    operand: FnExpr

    def __post_init__(self):
        _check_real_operand(self.operand, "Exp")

    @property
    def dom(self):
        return self.operand.dom

    def _eval(self, p):
        a = self.operand._eval(p)
        if a is BOTTOM:
            return BOTTOM
        try:
            return math.exp(float(_num(a, "Exp")))
        except OverflowError:
            raise NumericDomain(f"exp overflow at {a!r}")

    def _preimage(self, s):
        # exp is increasing with range (0, inf)
        pos = intersect(s, interval(0, POS_INF, False, False))
        inner = _transform_monotone(
            pos, lambda v: math.log(v) if v > 0 else NEG_INF, decreasing=False
        )
        return self.operand._preimage(inner)


@dataclass(frozen=True)
class LogF(_RealFn):
    """Natural log; raises NumericDomain on inputs <= 0."""

    operand: FnExpr

    def __post_init__(self):
        _check_real_operand(self.operand, "Log")

    @property
    def dom(self):
        return self.operand.dom

    def _eval(self, p):
        a = self.operand._eval(p)
        if a is BOTTOM:
            return BOTTOM
        a = _num(a, "Log")
        if a <= 0:
            raise NumericDomain(f"log of non-positive value {a!r}")
        return math.log(float(a))

    def _preimage(self, s):
        inner = _transform_monotone(s, lambda v: _safe_exp(v), decreasing=False)
        inner = intersect(inner, interval(0, POS_INF, False, False))
        return self.operand._preimage(inner)


@dataclass(frozen=True)
class SqrtF(_RealFn):
    """Square root; raises NumericDomain on negative inputs."""

    operand: FnExpr

    def __post_init__(self):
        _check_real_operand(self.operand, "Sqrt")

    @property
    def dom(self):
        return self.operand.dom

    def _eval(self, p):
        a = self.operand._eval(p)
        if a is BOTTOM:
            return BOTTOM
        a = _num(a, "Sqrt")
        if a < 0:
            raise NumericDomain(f"sqrt of negative value {a!r}")
        return math.sqrt(float(a))

    def _preimage(self, s):
        pos = intersect(s, interval(0, POS_INF, True, False))
        inner = _transform_monotone(pos, lambda v: v * v, decreasing=False)
        inner = intersect(inner, interval(0, POS_INF, True, False))
        return self.operand._preimage(inner)


@dataclass(frozen=True)
class NatOfFloor(FnExpr):
    """floor into the naturals; BOTTOM on negative reals."""

    operand: FnExpr

    def __post_init__(self):
        _check_real_operand(self.operand, "NatOfFloor")

    @property
    def dom(self):
        return self.operand.dom

    @property
    def cod(self):
        return NAT

    def _eval(self, p):
        a = self.operand._eval(p)
        if a is BOTTOM:
            return BOTTOM
        a = _num(a, "NatOfFloor")
        if a < 0:
            return BOTTOM
        return math.floor(a)

    def _preimage(self, s):
        if isinstance(s, EmptySet):
            return EmptySet(self.dom)
        if isinstance(s, FullSet):
            inner = interval(0, POS_INF, True, False)
        elif s.cofinite:
            holes = union_all(
                [interval(n, n + 1, True, False) for n in sorted(s.members)], REAL
            )
            inner = difference(interval(0, POS_INF, True, False), holes)
        else:
            inner = union_all(
                [interval(n, n + 1, True, False) for n in sorted(s.members)], REAL
            )
        return self.operand._preimage(inner)


@dataclass(frozen=True)
class NatToReal(FnExpr):
    """The embedding of the naturals into the reals."""

    operand: FnExpr

    def __post_init__(self):
        if self.operand.cod != NAT:
            raise TypeMismatch("NatToReal needs a Nat-valued operand")

    @property
    def dom(self):
        return self.operand.dom

    @property
    def cod(self):
        return REAL

    def _eval(self, p):
        a = self.operand._eval(p)
        if a is BOTTOM:
            return BOTTOM
        return a

    def _preimage(self, s):
        # which naturals land in the real set s?
        if isinstance(s, EmptySet):
            return EmptySet(self.dom)
        hits = set()
        unbounded_from = None
        if isinstance(s, FullSet):
            unbounded_from = 0
        else:
            for iv in s.intervals:
                if iv.hi == POS_INF:
                    start = 0 if iv.lo == NEG_INF else math.ceil(iv.lo)
                    if iv.lo != NEG_INF and start == iv.lo and not iv.lo_closed:
                        start += 1
                    unbounded_from = max(0, start)
                else:
                    lo = 0 if iv.lo == NEG_INF else max(0, math.ceil(iv.lo))
                    if iv.lo != NEG_INF and lo == iv.lo and not iv.lo_closed:
                        lo += 1
                    hi = math.floor(iv.hi)
                    if hi == iv.hi and not iv.hi_closed:
                        hi -= 1
                    hits.update(range(lo, hi + 1))
            for a in s.atoms_in:
                if a == int(a) and a >= 0:
                    hits.add(int(a))
        if unbounded_from is not None:
            excluded = set()
            # points of the tail removed by atom exclusions
            if isinstance(s, RealSet):
                excluded = {
                    int(a) for a in s.atoms_out if a == int(a) and a >= unbounded_from
                }
            members = {n for n in excluded} | {
                n for n in range(0, unbounded_from) if n not in hits
            }
            inner = nat_set(members, cofinite=True)
        else:
            if isinstance(s, RealSet):
                hits -= {int(a) for a in s.atoms_out if a == int(a)}
            inner = nat_set(hits)
        return self.operand._preimage(inner)


# ---------------------------------------------------------------------------
# [0, inf]-valued terms


class _ExtFn(FnExpr):
    __slots__ = ()

    @property
    def cod(self):
        return EXTREAL


def _weight_operand(f, what):
    if f.cod is not EXTREAL and f.cod != REAL:
        raise TypeMismatch(f"{what} needs a [0,inf]- or real-valued operand")


@dataclass(frozen=True)
class ExtLit(_ExtFn):
    _dom: SpaceExpr
    weight: ExtReal

    def __post_init__(self):
        object.__setattr__(self, "weight", as_ext(self.weight))

    @property
    def dom(self):
        return self._dom

    def _eval(self, p):
        return self.weight


@dataclass(frozen=True)
class ExtAddFn(_ExtFn):
    left: FnExpr
    right: FnExpr

    def __post_init__(self):
        _weight_operand(self.left, "ExtAdd")
        _weight_operand(self.right, "ExtAdd")
        _same_space(self.left.dom, self.right.dom, "ExtAdd operand domains")

    @property
    def dom(self):
        return self.left.dom

    def _eval(self, p):
        return as_weight(self.left._eval(p)) + as_weight(self.right._eval(p))


@dataclass(frozen=True)
class ExtMulFn(_ExtFn):
    left: FnExpr
    right: FnExpr

    def __post_init__(self):
        _weight_operand(self.left, "ExtMul")
        _weight_operand(self.right, "ExtMul")
        _same_space(self.left.dom, self.right.dom, "ExtMul operand domains")

    @property
    def dom(self):
        return self.left.dom

    def _eval(self, p):
        return as_weight(self.left._eval(p)) * as_weight(self.right._eval(p))


@dataclass(frozen=True)
class ExtDivFn(_ExtFn):
    """Total division for derivative terms: a/0 = inf for a > 0, 0/0 = 0,
    inf/inf = 1 (the canonical value on matched infinity regions)."""

    left: FnExpr
    right: FnExpr

    def __post_init__(self):
        _weight_operand(self.left, "ExtDiv")
        _weight_operand(self.right, "ExtDiv")
        _same_space(self.left.dom, self.right.dom, "ExtDiv operand domains")

    @property
    def dom(self):
        return self.left.dom

    def _eval(self, p):
        return rn_div(as_weight(self.left._eval(p)), as_weight(self.right._eval(p)))


# ---------------------------------------------------------------------------
# named density combinators


@dataclass(frozen=True)
class PdfNormal(_ExtFn):
    """Gaussian density of `point` under mean/sd, as a [0,inf]-valued term."""

    point: FnExpr
    mean: FnExpr
    sd: FnExpr

    def __post_init__(self):
        for f, what in ((self.point, "point"), (self.mean, "mean"), (self.sd, "sd")):
            _check_real_operand(f, f"PdfNormal {what}")
        _same_space(self.point.dom, self.mean.dom, "PdfNormal domains")
        _same_space(self.point.dom, self.sd.dom, "PdfNormal domains")

    @property
    def dom(self):
        return self.point.dom

    def _eval(self, p):
        x = self.point._eval(p)
        m = self.mean._eval(p)
        s = self.sd._eval(p)
        if BOTTOM in (x, m, s):
            return ZERO
        s = float(_num(s, "PdfNormal sd"))
        if s <= 0:
            raise NumericDomain(f"normal sd must be positive, got {s}")
        z = (float(x) - float(m)) / s
        return ExtReal(math.exp(-0.5 * z * z) / (s * SQRT_2PI))


@dataclass(frozen=True)
class PdfBeta(_ExtFn):
    """Beta(a, b) density of `point`; zero outside (0, 1)."""

    point: FnExpr
    a: FnExpr
    b: FnExpr

    def __post_init__(self):
        for f in (self.point, self.a, self.b):
            _check_real_operand(f, "PdfBeta")
        _same_space(self.point.dom, self.a.dom, "PdfBeta domains")
        _same_space(self.point.dom, self.b.dom, "PdfBeta domains")

    @property
    def dom(self):
        return self.point.dom

    def _eval(self, p):
        x = self.point._eval(p)
        a = self.a._eval(p)
        b = self.b._eval(p)
        if BOTTOM in (x, a, b):
            return ZERO
        x, a, b = float(x), float(a), float(b)
        if a <= 0 or b <= 0:
            raise NumericDomain("beta parameters must be positive")
        if not 0.0 < x < 1.0:
            return ZERO
        log_norm = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        return ExtReal(math.exp(log_norm + (a - 1) * math.log(x) + (b - 1) * math.log1p(-x)))


@dataclass(frozen=True)
class PdfPoisson(_ExtFn):
    """Poisson(rate) mass of a natural-valued `point`."""

    point: FnExpr
    rate: FnExpr

    def __post_init__(self):
        if self.point.cod != NAT:
            raise TypeMismatch("PdfPoisson point must be Nat-valued")
        _check_real_operand(self.rate, "PdfPoisson rate")
        _same_space(self.point.dom, self.rate.dom, "PdfPoisson domains")

    @property
    def dom(self):
        return self.point.dom

    def _eval(self, p):
        n = self.point._eval(p)
        lam = self.rate._eval(p)
        if BOTTOM in (n, lam):
            return ZERO
        lam = float(_num(lam, "PdfPoisson rate"))
        if lam <= 0:
            raise NumericDomain("poisson rate must be positive")
        return ExtReal(
            math.exp(-lam + n * math.log(lam) - math.lgamma(n + 1))
        )


# ---------------------------------------------------------------------------
# affine analysis and monotone preimages


def as_affine(f: FnExpr):
    """Recognise f as x |-> a*x + b on the reals; returns (a, b) or None."""
    if isinstance(f, Id) and f.space == REAL:
        return (Fraction(1), Fraction(0))
    if isinstance(f, Const) and f.cod == REAL:
        return (Fraction(0), f.value)
    if isinstance(f, Neg):
        inner = as_affine(f.operand)
        if inner is None:
            return None
        return (-inner[0], -inner[1])
    if isinstance(f, Add):
        l, r = as_affine(f.left), as_affine(f.right)
        if l is None or r is None:
            return None
        return (l[0] + r[0], l[1] + r[1])
    if isinstance(f, Sub):
        l, r = as_affine(f.left), as_affine(f.right)
        if l is None or r is None:
            return None
        return (l[0] - r[0], l[1] - r[1])
    if isinstance(f, Mul):
        l, r = as_affine(f.left), as_affine(f.right)
        if l is None or r is None:
            return None
        if l[0] == 0:
            return (l[1] * r[0], l[1] * r[1])
        if r[0] == 0:
            return (r[1] * l[0], r[1] * l[1])
        return None
    if isinstance(f, Compose):
        o, i = as_affine(f.outer), as_affine(f.inner)
        if o is None or i is None:
            return None
        return (o[0] * i[0], o[0] * i[1] + o[1])
    return None


def _affine_preimage(f: FnExpr, s: SetExpr) -> SetExpr:
    """Preimage for arithmetic terms that are affine in a single real input,
    or affine over a non-real domain via an inner structured term."""
    coeffs = _split_affine(f)
    if coeffs is None:
        raise Unsupported("arithmetic term is not affine over the sub-language")
    inner, a, b = coeffs
    if a == 0:
        if not member(s, b):
            return EmptySet(f.dom)
        if inner is None:
            return FullSet(f.dom)
        # evaluation is strict: a zero coefficient does not erase the
        # partiality of the operand
        return inner._preimage(FullSet(inner.cod))
    decreasing = a < 0
    mapped = _transform_monotone(s, lambda v: (v - b) / a, decreasing=decreasing)
    if inner is None:
        return mapped
    return inner._preimage(mapped)


def _split_affine(f: FnExpr):
    """Write f = a * g + b with g a structured real-valued term (or g = id).

    Returns (g_or_None, a, b); None means f is affinely built on Id(REAL).
    """
    direct = as_affine(f)
    if direct is not None:
        if f.dom == REAL:
            return (None, direct[0], direct[1])
        return (None, Fraction(0), direct[1]) if direct[0] == 0 else None
    # a * g + b patterns around one non-affine structured subterm
    if isinstance(f, Add):
        for this, other in ((f.left, f.right), (f.right, f.left)):
            c = as_affine(other)
            if c is not None and c[0] == 0:
                split = _split_affine(this)
                if split is not None:
                    g, a, b = split
                    return (g, a, b + c[1])
        return None
    if isinstance(f, Sub):
        cl = as_affine(f.left)
        cr = as_affine(f.right)
        if cr is not None and cr[0] == 0:
            split = _split_affine(f.left)
            if split is not None:
                g, a, b = split
                return (g, a, b - cr[1])
        if cl is not None and cl[0] == 0:
            split = _split_affine(f.right)
            if split is not None:
                g, a, b = split
                return (g, -a, cl[1] - b)
        return None
    if isinstance(f, Mul):
        for this, other in ((f.left, f.right), (f.right, f.left)):
            c = as_affine(other)
            if c is not None and c[0] == 0:
                split = _split_affine(this)
                if split is not None:
                    g, a, b = split
                    return (g, a * c[1], b * c[1])
        return None
    if isinstance(f, Neg):
        split = _split_affine(f.operand)
        if split is not None:
            g, a, b = split
            return (g, -a, -b)
        return None
    # the non-affine core itself
    return (f, Fraction(1), Fraction(0)) if f.cod == REAL else None


def _safe_exp(v):
    try:
        return math.exp(float(v))
    except OverflowError:
        return POS_INF


def _transform_monotone(s: SetExpr, g, decreasing=False) -> SetExpr:
    """Map a real set through a monotone point transform g (applied to
    endpoints and atoms); used for preimages of monotone bijections."""
    if isinstance(s, EmptySet):
        return s
    if isinstance(s, FullSet):
        return s
    ivs = []
    for iv in s.intervals:
        lo = NEG_INF if iv.lo == NEG_INF else g(iv.lo)
        hi = POS_INF if iv.hi == POS_INF else g(iv.hi)
        if decreasing:
            lo, hi = (NEG_INF if hi == POS_INF else hi), (POS_INF if lo == NEG_INF else lo)
            lo_closed, hi_closed = iv.hi_closed, iv.lo_closed
        else:
            lo_closed, hi_closed = iv.lo_closed, iv.hi_closed
        ivs.append(Interval(lo, hi, lo_closed and lo not in (NEG_INF, POS_INF),
                            hi_closed and hi not in (NEG_INF, POS_INF)))
    atoms_in = [g(a) for a in s.atoms_in]
    atoms_out = [g(a) for a in s.atoms_out]
    return real_set(ivs, atoms_in, atoms_out)


def _floor_preimage(s: SetExpr) -> SetExpr:
    """{x : floor(x) in s} for a real set s."""
    if isinstance(s, (EmptySet, FullSet)):
        return s
    pieces = []
    neg_tail = None  # (-inf, n) pieces
    pos_tail = None  # [n, inf) pieces
    ints = set()
    for iv in s.intervals:
        lo_unb = iv.lo == NEG_INF
        hi_unb = iv.hi == POS_INF
        if not lo_unb:
            lo = math.ceil(iv.lo)
            if lo == iv.lo and not iv.lo_closed:
                lo += 1
        if not hi_unb:
            hi = math.floor(iv.hi)
            if hi == iv.hi and not iv.hi_closed:
                hi -= 1
        if lo_unb and hi_unb:
            return FullSet(REAL)
        if lo_unb:
            neg_tail = hi if neg_tail is None else max(neg_tail, hi)
        elif hi_unb:
            pos_tail = lo if pos_tail is None else min(pos_tail, lo)
        else:
            ints.update(range(lo, hi + 1))
    for a in s.atoms_in:
        if a == int(a):
            ints.add(int(a))
    out_ints = {int(a) for a in s.atoms_out if a == int(a)}
    ints -= out_ints
    for n in sorted(ints):
        pieces.append(Interval(Fraction(n), Fraction(n + 1), True, False))
    if neg_tail is not None:
        pieces.append(Interval(NEG_INF, Fraction(neg_tail + 1), False, False))
    if pos_tail is not None:
        pieces.append(Interval(Fraction(pos_tail), POS_INF, True, False))
    base = real_set(pieces)
    if (neg_tail is not None or pos_tail is not None) and out_ints:
        holes = [
            Interval(Fraction(n), Fraction(n + 1), True, False)
            for n in sorted(out_ints)
        ]
        base = difference(base, real_set(holes))
    return base


# ---------------------------------------------------------------------------
# convenience builders


def fn_id(space) -> FnExpr:
    return Id(space)


def compose(*fns) -> FnExpr:
    """compose(f, g, h) = f after g after h."""
    acc = fns[-1]
    for f in reversed(fns[:-1]):
        acc = Compose(f, acc)
    return acc


def fn_pow(f: FnExpr, n: int) -> FnExpr:
    """f**n for n >= 0 by repeated multiplication."""
    if n == 0:
        return Const(f.dom, 1, REAL)
    acc = f
    for _ in range(n - 1):
        acc = Mul(acc, f)
    return acc


def scale(c, f: FnExpr) -> FnExpr:
    return Mul(Const(f.dom, c, REAL), f)


def partial_left(f: FnExpr, x) -> FnExpr:
    """Fix the first coordinate of a function on a product: y |-> f(x, y).

    Substitutes structurally where possible, so affine/preimage analysis
    still applies to the result; otherwise wraps opaquely.
    """
    if not isinstance(f.dom, Prod):
        raise TypeMismatch("partial_left needs a product-domain function")
    check_point(x, f.dom.left)
    try:
        return _subst_left(f, x)
    except Unsupported:
        return _PartialLeft(f, x)


def partial_right(f: FnExpr, y) -> FnExpr:
    """Fix the second coordinate of a function on a product: x |-> f(x, y)."""
    if not isinstance(f.dom, Prod):
        raise TypeMismatch("partial_right needs a product-domain function")
    check_point(y, f.dom.right)
    try:
        return _subst_pair(f, None, y)
    except Unsupported:
        return _PartialRight(f, y)


def _subst_left(f: FnExpr, x) -> FnExpr:
    return _subst_pair(f, x, None)


def _section(s, x, y):
    from .sets import section_at, section_at_right

    return section_at(s, x) if y is None else section_at_right(s, y)


def _subst_pair(f: FnExpr, x, y) -> FnExpr:
    """Substitute one coordinate of a product-domain term (x fixes the
    first, y the second; exactly one is given)."""
    dom = f.dom
    kept = dom.right if y is None else dom.left
    fixed_space = dom.left if y is None else dom.right
    fixed = x if y is None else y

    def pair_of_id():
        if y is None:
            return PairFn(Const(kept, fixed, fixed_space), Id(kept))
        return PairFn(Id(kept), Const(kept, fixed, fixed_space))

    def sub(g):
        return _subst_pair(g, x, y)

    if isinstance(f, Proj1):
        return Const(kept, fixed, fixed_space) if y is None else Id(kept)
    if isinstance(f, Proj2):
        return Id(kept) if y is None else Const(kept, fixed, fixed_space)
    if isinstance(f, Id):
        return pair_of_id()
    if isinstance(f, Const):
        return Const(kept, f.value, f._cod)
    if isinstance(f, ExtLit):
        return ExtLit(kept, f.weight)
    if isinstance(f, Indicator):
        return Indicator(_section(f.set_expr, x, y))
    if isinstance(f, RestrictTo):
        return Compose(pair_of_id(), RestrictTo(_section(f.set_expr, x, y)))
    if isinstance(f, IfSet):
        return IfSet(_section(f.cond, x, y), sub(f.then_fn), sub(f.else_fn))
    if isinstance(f, Compose):
        return Compose(f.outer, sub(f.inner))
    if isinstance(f, PairFn):
        return PairFn(sub(f.first), sub(f.second))
    binary = (Add, Sub, Mul, SafeDiv, ExtAddFn, ExtMulFn, ExtDivFn)
    for cls in binary:
        if type(f) is cls:
            return cls(sub(f.left), sub(f.right))
    unary = (Neg, AbsF, FloorF, ExpF, LogF, SqrtF, NatOfFloor, NatToReal)
    for cls in unary:
        if type(f) is cls:
            return cls(sub(f.operand))
    if isinstance(f, PdfNormal):
        return PdfNormal(sub(f.point), sub(f.mean), sub(f.sd))
    if isinstance(f, PdfBeta):
        return PdfBeta(sub(f.point), sub(f.a), sub(f.b))
    if isinstance(f, PdfPoisson):
        return PdfPoisson(sub(f.point), sub(f.rate))
    raise Unsupported(f"cannot substitute into {type(f).__name__}")


@dataclass(frozen=True)
class _PartialLeft(FnExpr):
    fn: FnExpr
    x: object

    @property
    def dom(self):
        return self.fn.dom.right

    @property
    def cod(self):
        return self.fn.cod

    def _eval(self, p):
        return self.fn._eval((self.x, p))

    def _preimage(self, s):
        whole = self.fn._preimage(s)
        from .sets import section_at

        return section_at(whole, self.x)


@dataclass(frozen=True)
class _PartialRight(FnExpr):
    fn: FnExpr
    y: object

    @property
    def dom(self):
        return self.fn.dom.left

    @property
    def cod(self):
        return self.fn.cod

    def _eval(self, p):
        return self.fn._eval((p, self.y))

    def _preimage(self, s):
        whole = self.fn._preimage(s)
        from .sets import section_at_right

        return section_at_right(whole, self.y)

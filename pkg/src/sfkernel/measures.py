"""Representable s-finite measures.

A measure term is a countable weighted sum of base pieces:

    Weighted(w, base)      一 piece, w in [0, inf]
    FiniteSum(parts)
    SeqSum(gen, tail_bound[, family])   lazy countable sum
    Zero

Base pieces are Dirac atoms, counting measures on finite/natural supports,
Lebesgue-density pieces on the reals, binary products of bases, and (an
internal extension) two-dimensional joint densities on Real x Real.

Evaluation returns a value plus an honesty mode: Exact for the
atom/counting/interval-constant paths (exact rational arithmetic all the
way), Truncated(bound) when a lazy sum was cut or quadrature was used,
and DivergesToInfinity when partial sums blow past 1/tol while the tail
bound stays away from zero.

SeqSum terms may carry a `family` tag describing how they were built
(constant repetition, geometric weights, disjoint windows, pmf atoms);
normalisation uses the tag to rewrite lazy sums into closed pieces, which
is what powers the top 0-inf-set computation and classification.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import TypeMismatch, Unsupported
from .extreal import INF, ONE, ZERO, ExtReal, as_ext, ext_mul, ext_sum
from . import quadrature
from .funcs import (
    Compose,
    Const,
    ExtLit,
    ExtMulFn,
    FnExpr,
    Id,
    IfSet,
    Indicator,
    PdfBeta,
    PdfNormal,
    PdfPoisson,
    as_affine,
    as_weight,
    eval_fn,
    partial_left,
    preimage,
)
from .sets import (
    EmptySet,
    FullSet,
    Interval,
    NEG_INF,
    POS_INF,
    SetExpr,
    complement,
    count_members,
    difference,
    disjoint_rectangles,
    enumerate_set,
    fin_set,
    intersect,
    interval,
    is_empty_set,
    lebesgue_length,
    member,
    nat_set,
    prod_set,
    real_atoms,
    real_set,
    rectangle,
    sum_set,
    union,
    union_all,
)
from .spaces import (
    BOTTOM,
    Fin,
    Inl,
    Inr,
    NAT,
    Nat,
    Prod,
    REAL,
    Real,
    SpaceExpr,
    Sum,
    UNIT,
    Unit,
    check_point,
)

DEFAULT_TOL = 1e-9
DEFAULT_MAX_TERMS = 10**6


# ---------------------------------------------------------------------------
# evaluation results


EXACT = "exact"
TRUNCATED = "truncated"
DIVERGES = "diverges"


@dataclass(frozen=True)
class EvalResult:
    value: ExtReal
    mode: str
    error_bound: ExtReal

    @staticmethod
    def exact(v) -> "EvalResult":
        return EvalResult(as_ext(v), EXACT, ZERO)

    @staticmethod
    def truncated(v, bound) -> "EvalResult":
        bound = as_ext(bound)
        if bound == ZERO:
            return EvalResult.exact(v)
        return EvalResult(as_ext(v), TRUNCATED, bound)

    @staticmethod
    def diverges() -> "EvalResult":
        return EvalResult(INF, DIVERGES, INF)

    def __add__(self, other: "EvalResult") -> "EvalResult":
        if DIVERGES in (self.mode, other.mode):
            return EvalResult.diverges()
        v = self.value + other.value
        if self.mode == EXACT and other.mode == EXACT:
            return EvalResult.exact(v)
        return EvalResult.truncated(v, self.error_bound + other.error_bound)

    def scaled(self, w) -> "EvalResult":
        w = as_ext(w)
        if self.mode == DIVERGES:
            return EvalResult.diverges() if not w.is_zero else EvalResult.exact(0)
        v = ext_mul(w, self.value)
        if self.mode == EXACT:
            return EvalResult.exact(v)
        return EvalResult.truncated(v, ext_mul(w, self.error_bound))


def _mul_results(a: EvalResult, b: EvalResult) -> EvalResult:
    if DIVERGES in (a.mode, b.mode):
        other = b if a.mode == DIVERGES else a
        if other.value.is_zero and other.mode == EXACT:
            return EvalResult.exact(0)
        return EvalResult.diverges()
    v = ext_mul(a.value, b.value)
    if a.mode == EXACT and b.mode == EXACT:
        return EvalResult.exact(v)
    bound = (
        ext_mul(a.error_bound, b.value)
        + ext_mul(b.error_bound, a.value)
        + ext_mul(a.error_bound, b.error_bound)
    )
    return EvalResult.truncated(v, bound)


# ---------------------------------------------------------------------------
# base measures


class BaseMeasure:
    __slots__ = ()

    @property
    def space(self) -> SpaceExpr:
        raise NotImplementedError


@dataclass(frozen=True)
class DiracB(BaseMeasure):
    point: object
    _space: SpaceExpr

    def __post_init__(self):
        check_point(self.point, self._space)

    @property
    def space(self):
        return self._space

    def __repr__(self):
        return f"Dirac({self.point!r})"


@dataclass(frozen=True)
class CountingFin(BaseMeasure):
    set_expr: SetExpr

    def __post_init__(self):
        if not isinstance(self.set_expr.space, Fin):
            raise TypeMismatch("CountingFin needs a finite-space set")

    @property
    def space(self):
        return self.set_expr.space

    def __repr__(self):
        return f"CountingFin({self.set_expr!r})"


@dataclass(frozen=True)
class CountingNat(BaseMeasure):
    set_expr: SetExpr

    def __post_init__(self):
        if not isinstance(self.set_expr.space, Nat):
            raise TypeMismatch("CountingNat needs a set on the naturals")

    @property
    def space(self):
        return NAT

    def __repr__(self):
        return f"CountingNat({self.set_expr!r})"


@dataclass(frozen=True)
class LebesgueDensity(BaseMeasure):
    """density d(lambda) restricted to `support`; density None means 1."""

    support: SetExpr
    density: object = None  # FnExpr Real -> [0, inf], or None

    def __post_init__(self):
        if not isinstance(self.support.space, Real):
            raise TypeMismatch("LebesgueDensity lives on the reals")
        if self.density is not None and self.density.dom != REAL:
            raise TypeMismatch("density must be a function of a real variable")

    @property
    def space(self):
        return REAL

    def __repr__(self):
        if self.density is None:
            return f"Lebesgue|{self.support!r}"
        return f"Density({self.support!r})"


@dataclass(frozen=True)
class ProductBase(BaseMeasure):
    left: BaseMeasure
    right: BaseMeasure

    @property
    def space(self):
        return Prod(self.left.space, self.right.space)

    def __repr__(self):
        return f"({self.left!r} (x) {self.right!r})"


@dataclass(frozen=True)
class JointDensity(BaseMeasure):
    """Two-dimensional Lebesgue density on Real x Real (representation
    extension; see the project notes)."""

    support: SetExpr
    density: FnExpr

    def __post_init__(self):
        if self.support.space != Prod(REAL, REAL):
            raise TypeMismatch("JointDensity lives on Real x Real")
        if self.density.dom != Prod(REAL, REAL):
            raise TypeMismatch("joint density must be a function on Real x Real")

    @property
    def space(self):
        return Prod(REAL, REAL)

    def __repr__(self):
        return f"JointDensity({self.support!r})"


# ---------------------------------------------------------------------------
# measure expressions


class MeasureExpr:
    __slots__ = ()

    @property
    def space(self) -> SpaceExpr:
        raise NotImplementedError


@dataclass(frozen=True)
class Weighted(MeasureExpr):
    weight: ExtReal
    base: BaseMeasure

    def __post_init__(self):
        object.__setattr__(self, "weight", as_ext(self.weight))

    @property
    def space(self):
        return self.base.space

    def __repr__(self):
        return f"{self.weight} * {self.base!r}"


@dataclass(frozen=True)
class FiniteSum(MeasureExpr):
    parts: tuple

    def __post_init__(self):
        if not self.parts:
            raise TypeMismatch("FiniteSum needs at least one part (use Zero)")
        sp = self.parts[0].space
        for p in self.parts:
            if p.space != sp:
                raise TypeMismatch("sum of measures on different spaces")

    @property
    def space(self):
        return self.parts[0].space

    def __repr__(self):
        return " + ".join(repr(p) for p in self.parts)


@dataclass(frozen=True, eq=False)
class SeqSum(MeasureExpr):
    """Lazy countable sum.  gen and tail_bound must be pure total maps;
    tail_bound(n) bounds the total mass of all pieces from index n on and
    is nonincreasing.  `family` records how the sum was constructed."""

    _space: SpaceExpr
    gen: object  # n -> MeasureExpr
    tail_bound: object  # n -> ExtReal
    family: tuple = None

    @property
    def space(self):
        return self._space

    def __repr__(self):
        tag = self.family[0] if self.family else "generic"
        return f"SeqSum<{tag}>"


@dataclass(frozen=True)
class ZeroMeasure(MeasureExpr):
    _space: SpaceExpr

    @property
    def space(self):
        return self._space

    def __repr__(self):
        return "Zero"


# ---------------------------------------------------------------------------
# piecewise-constant density analysis (the exact path)


def piecewise_constant_parts(f, dom=None):
    """Recognise f as finitely many constant pieces: [(set, value), ...]
    with disjoint sets and implicit zero elsewhere; None if unrecognised.

    This is both the exact integration path for simple functions and the
    extractor that lets infinite density values be carried as weights.
    """
    if f is None:
        if dom is None:
            return None
        return [(FullSet(dom), ONE)]
    if isinstance(f, ExtLit):
        return [] if f.weight.is_zero else [(FullSet(f.dom), f.weight)]
    if isinstance(f, Const):
        try:
            w = as_weight(f.value)
        except Exception:
            return None
        return [] if w.is_zero else [(FullSet(f.dom), w)]
    if isinstance(f, Indicator):
        return [(f.set_expr, ONE)]
    if isinstance(f, IfSet):
        a = piecewise_constant_parts(f.then_fn)
        b = piecewise_constant_parts(f.else_fn)
        if a is None or b is None:
            return None
        out = []
        for s, v in a:
            r = intersect(s, f.cond)
            if not is_empty_set(r):
                out.append((r, v))
        neg = complement(f.cond)
        for s, v in b:
            r = intersect(s, neg)
            if not is_empty_set(r):
                out.append((r, v))
        return out
    if isinstance(f, ExtMulFn):
        a = piecewise_constant_parts(f.left)
        b = piecewise_constant_parts(f.right)
        if a is None or b is None:
            return None
        out = []
        for sa, va in a:
            for sb, vb in b:
                r = intersect(sa, sb)
                if not is_empty_set(r):
                    v = ext_mul(va, vb)
                    if not v.is_zero:
                        out.append((r, v))
        return out
    from .funcs import Mul as _Mul

    if isinstance(f, _Mul):
        a = piecewise_constant_parts(f.left)
        b = piecewise_constant_parts(f.right)
        if a is None or b is None:
            return None
        out = []
        for sa, va in a:
            for sb, vb in b:
                r = intersect(sa, sb)
                if not is_empty_set(r):
                    v = ext_mul(va, vb)
                    if not v.is_zero:
                        out.append((r, v))
        return out
    if isinstance(f, Compose) and isinstance(f.outer, Indicator):
        try:
            pre = preimage(f.inner, f.outer.set_expr)
        except Unsupported:
            return None
        return [(pre, ONE)]
    if isinstance(f, Compose):
        # constant-piece outer through a preimage-computable inner
        outer_parts = piecewise_constant_parts(f.outer)
        if outer_parts is None:
            return None
        out = []
        for s, v in outer_parts:
            try:
                pre = preimage(f.inner, s)
            except Unsupported:
                return None
            if not is_empty_set(pre):
                out.append((pre, v))
        return out
    return None


def _density_fn(density, x):
    if density is None:
        return ONE
    return as_weight(eval_fn(density, x))


# ---------------------------------------------------------------------------
# measure of a set


def measure_of(mu: MeasureExpr, A: SetExpr, tol=DEFAULT_TOL, max_terms=DEFAULT_MAX_TERMS) -> EvalResult:
    """Evaluate mu(A)."""
    if A.space != mu.space:
        raise TypeMismatch(f"set on {A.space!r} against measure on {mu.space!r}")
    return _measure_of(mu, A, tol, max_terms)


def closed_form(mu: MeasureExpr):
    """Collapse a family-tagged lazy sum to a closed equivalent, or None.

    Constant repetition is an infinite scale, geometric weights are a
    finite scale, and the lazily-mapped families (scaled, restricted,
    pushed, scored, embedded) distribute over a collapsible inner sum."""
    if not isinstance(mu, SeqSum) or not mu.family:
        return None
    tag = mu.family[0]
    if tag == "const-repeat":
        return scale_measure(INF, mu.family[1])
    if tag == "geometric":
        ratio = mu.family[1]
        return scale_measure(Fraction(1) / (1 - ratio), mu.family[2])
    if tag in ("scaled", "restricted", "pushed", "embedded", "embedded-r"):
        inner = mu.family[2] if tag != "scored-seq" else mu.family[1]
        collapsed = closed_form(inner) if isinstance(inner, SeqSum) else inner
        if collapsed is None or isinstance(collapsed, SeqSum):
            return None
        if tag == "scaled":
            return scale_measure(mu.family[1], collapsed)
        if tag == "restricted":
            return restrict_measure(collapsed, mu.family[1])
        if tag == "pushed":
            from .kernels import push_measure

            return push_measure(collapsed, mu.family[1])
        if tag == "embedded":
            from .kernels import _embed_left

            return _embed_left(mu.family[1], mu.space.left, collapsed)
        if tag == "embedded-r":
            from .kernels import _embed_right

            return _embed_right(collapsed, mu.family[1], mu.space.right)
    if tag == "scored-seq":
        inner = mu.family[1]
        collapsed = closed_form(inner) if isinstance(inner, SeqSum) else inner
        if collapsed is None or isinstance(collapsed, SeqSum):
            return None
        from .kernels import score_measure

        return score_measure(collapsed, mu.family[2])
    return None


def _measure_of(mu, A, tol, max_terms) -> EvalResult:
    if isinstance(mu, ZeroMeasure) or isinstance(A, EmptySet):
        return EvalResult.exact(0)
    if isinstance(mu, Weighted):
        return _base_measure_of(mu.base, A, tol, max_terms).scaled(mu.weight)
    if isinstance(mu, FiniteSum):
        acc = EvalResult.exact(0)
        for p in mu.parts:
            acc = acc + _measure_of(p, A, tol, max_terms)
        return acc
    if isinstance(mu, SeqSum):
        closed = closed_form(mu)
        if closed is not None:
            return _measure_of(closed, A, tol, max_terms)
        return _seq_eval(
            mu, lambda piece: _measure_of(piece, A, tol, max_terms), tol, max_terms
        )
    raise TypeMismatch(f"not a measure expression: {mu!r}")


def _seq_eval(mu: SeqSum, piece_eval, tol, max_terms) -> EvalResult:
    total = EvalResult.exact(0)
    threshold = 1.0 / tol
    n = 0
    while n < max_terms:
        tb = as_ext(mu.tail_bound(n))
        if tb <= tol:
            return EvalResult.truncated(total.value, total.error_bound + tb)
        r = piece_eval(mu.gen(n))
        total = total + r
        if total.mode == DIVERGES:
            return total
        if total.value.is_inf:
            return EvalResult(INF, total.mode, total.error_bound)
        if float(total.value) > threshold:
            return EvalResult.diverges()
        n += 1
    tb = as_ext(mu.tail_bound(n))
    return EvalResult.truncated(total.value, total.error_bound + tb)


def _quad_region(region: SetExpr, integrand, tol) -> EvalResult:
    """Numeric integral of a nonnegative callable over a Real set."""
    if isinstance(region, EmptySet):
        return EvalResult.exact(0)
    if isinstance(region, FullSet):
        ivs = [Interval(NEG_INF, POS_INF, False, False)]
    else:
        ivs = region.intervals
    val = 0.0
    err = 0.0
    for iv in ivs:
        v, e = quadrature.integrate_interval(integrand, iv.lo, iv.hi, tol)
        if v == math.inf:
            return EvalResult.truncated(INF, INF)
        val += v
        err += e
    if err == 0.0 and val == 0.0:
        return EvalResult.exact(0)
    return EvalResult.truncated(val, max(err, 0.0))


def _base_measure_of(b: BaseMeasure, A: SetExpr, tol, max_terms) -> EvalResult:
    if isinstance(b, DiracB):
        return EvalResult.exact(1 if member(A, b.point) else 0)
    if isinstance(b, CountingFin) or isinstance(b, CountingNat):
        return EvalResult.exact(count_members(intersect(b.set_expr, A)))
    if isinstance(b, LebesgueDensity):
        region = intersect(b.support, A)
        if is_empty_set(region):
            return EvalResult.exact(0)
        if b.density is None:
            return EvalResult.exact(lebesgue_length(region))
        parts = piecewise_constant_parts(b.density)
        if parts is not None:
            acc = EvalResult.exact(0)
            for s, v in parts:
                piece = intersect(region, s)
                acc = acc + EvalResult.exact(ext_mul(v, lebesgue_length(piece)))
            return acc
        dens = b.density
        return _quad_region(region, lambda x: float(as_weight(eval_fn(dens, x))), tol)
    if isinstance(b, ProductBase):
        if isinstance(A, FullSet):
            rects = [(FullSet(b.left.space), FullSet(b.right.space))]
        else:
            rects = disjoint_rectangles(A)
        acc = EvalResult.exact(0)
        for ra, rb in rects:
            acc = acc + _mul_results(
                _base_measure_of(b.left, ra, tol, max_terms),
                _base_measure_of(b.right, rb, tol, max_terms),
            )
        return acc
    if isinstance(b, JointDensity):
        region = intersect(b.support, A) if not isinstance(A, FullSet) else b.support
        if is_empty_set(region):
            return EvalResult.exact(0)
        dens = b.density
        acc = EvalResult.exact(0)
        for ra, rb in disjoint_rectangles(region):
            def outer(x, rb=rb):
                fx = partial_left(dens, x)
                inner = _quad_region(
                    rb, lambda y: float(as_weight(eval_fn(fx, y))), tol / 4
                )
                return float(inner.value)

            acc = acc + _quad_region(ra, outer, tol / 2)
        return acc
    raise TypeMismatch(f"not a base measure: {b!r}")


# ---------------------------------------------------------------------------
# integration


def integrate(mu: MeasureExpr, f, tol=DEFAULT_TOL, max_terms=DEFAULT_MAX_TERMS, seed=0) -> EvalResult:
    """Integral of a [0, inf]-valued function term against mu.

    Simple functions (finite constant pieces, indicators through
    structured preimages) integrate exactly; density pieces fall back to
    deterministic adaptive quadrature at the given tolerance.  `seed` is
    accepted for interface stability; the default integrator is fully
    deterministic and does not consume it.
    """
    if f.dom != mu.space:
        raise TypeMismatch(f"integrand on {f.dom!r} against measure on {mu.space!r}")
    parts = piecewise_constant_parts(f)
    if parts is not None:
        acc = EvalResult.exact(0)
        for s, v in parts:
            acc = acc + _measure_of(mu, s, tol, max_terms).scaled(v)
        return acc
    return _integrate(mu, f, tol, max_terms)


def _integrate(mu, f, tol, max_terms) -> EvalResult:
    if isinstance(mu, ZeroMeasure):
        return EvalResult.exact(0)
    if isinstance(mu, Weighted):
        return _base_integral(mu.base, f, tol, max_terms).scaled(mu.weight)
    if isinstance(mu, FiniteSum):
        acc = EvalResult.exact(0)
        for p in mu.parts:
            acc = acc + _integrate(p, f, tol, max_terms)
        return acc
    if isinstance(mu, SeqSum):
        closed = closed_form(mu)
        if closed is not None:
            return _integrate(closed, f, tol, max_terms)
        return _seq_eval(mu, lambda piece: _integrate(piece, f, tol, max_terms), tol, max_terms)
    raise TypeMismatch(f"not a measure expression: {mu!r}")


def _base_integral(b: BaseMeasure, f, tol, max_terms) -> EvalResult:
    parts = piecewise_constant_parts(f)
    if parts is not None:
        acc = EvalResult.exact(0)
        for s, v in parts:
            acc = acc + _base_measure_of(b, s, tol, max_terms).scaled(v)
        return acc
    if isinstance(b, DiracB):
        return EvalResult.exact(as_weight(eval_fn(f, b.point)))
    if isinstance(b, (CountingFin, CountingNat)):
        s = b.set_expr
        if isinstance(s, FullSet) and isinstance(b, CountingFin):
            pts = list(s.space.labels)
        elif isinstance(b, CountingNat) and (
            isinstance(s, FullSet) or (hasattr(s, "cofinite") and s.cofinite)
        ):
            return _nat_sum(s, f, tol, max_terms)
        else:
            pts = enumerate_set(s)
        return EvalResult.exact(ext_sum(as_weight(eval_fn(f, p)) for p in pts))
    if isinstance(b, LebesgueDensity):
        dens = b.density
        region = b.support

        def integrand(x):
            w = as_weight(eval_fn(f, x))
            if w.is_zero:
                return 0.0
            return float(w * _density_fn(dens, x))

        return _quad_region(region if not isinstance(region, FullSet) else FullSet(REAL), integrand, tol)
    if isinstance(b, ProductBase):
        return _iterated_product_integral(b.left, b.right, f, tol, max_terms)
    if isinstance(b, JointDensity):
        dens = b.density
        acc = EvalResult.exact(0)
        for ra, rb in disjoint_rectangles(b.support):
            def outer(x, rb=rb):
                fx = partial_left(f, x)
                dx = partial_left(dens, x)
                inner = _quad_region(
                    rb,
                    lambda y: float(as_weight(eval_fn(fx, y)) * as_weight(eval_fn(dx, y))),
                    tol / 4,
                )
                return float(inner.value)

            acc = acc + _quad_region(ra, outer, tol / 2)
        return acc
    raise TypeMismatch(f"not a base measure: {b!r}")


def _nat_sum(s, f, tol, max_terms) -> EvalResult:
    """Integral against counting measure on an infinite set of naturals."""
    excluded = set() if isinstance(s, FullSet) else set(s.members)
    total = EvalResult.exact(0)
    threshold = 1.0 / tol
    n = 0
    seen = 0
    while seen < max_terms:
        if n not in excluded:
            w = as_weight(eval_fn(f, n))
            total = total + EvalResult.exact(w)
            if total.value.is_inf:
                return total
            if float(total.value) > threshold:
                return EvalResult.diverges()
            seen += 1
        n += 1
    return EvalResult.truncated(total.value, INF)


def _iterated_product_integral(bl, br, f, tol, max_terms) -> EvalResult:
    """Left-iterated integration over a product base."""
    inner_measure = Weighted(ONE, br)

    def inner_value(x):
        fx = partial_left(f, x)
        return _integrate(inner_measure, fx, tol, max_terms)

    if isinstance(bl, DiracB):
        return inner_value(bl.point)
    if isinstance(bl, (CountingFin, CountingNat)):
        s = bl.set_expr
        if isinstance(bl, CountingNat) and (isinstance(s, FullSet) or s.cofinite):
            excluded = set() if isinstance(s, FullSet) else set(s.members)
            total = EvalResult.exact(0)
            threshold = 1.0 / tol
            n = 0
            seen = 0
            while seen < max_terms:
                if n not in excluded:
                    total = total + inner_value(n)
                    if total.value.is_inf:
                        return total
                    if float(total.value) > threshold:
                        return EvalResult.diverges()
                    seen += 1
                n += 1
            return EvalResult.truncated(total.value, INF)
        acc = EvalResult.exact(0)
        pts = list(s.space.labels) if isinstance(s, FullSet) else enumerate_set(s)
        for p in pts:
            acc = acc + inner_value(p)
        return acc
    if isinstance(bl, LebesgueDensity):
        dens = bl.density
        region = bl.support
        exact_zero = True

        def integrand(x):
            nonlocal exact_zero
            r = inner_value(x)
            v = float(r.value) * float(_density_fn(dens, x))
            if v != 0.0 or r.mode != EXACT:
                exact_zero = False
            return v

        out = _quad_region(region, integrand, tol)
        if exact_zero and out.value == ZERO:
            return EvalResult.exact(0)
        return out
    raise Unsupported(f"iterated integration over {type(bl).__name__} first factor")


# ---------------------------------------------------------------------------
# constructors and rewrites


def dirac(p, space: SpaceExpr) -> MeasureExpr:
    return Weighted(ONE, DiracB(p, space))


def lebesgue(a=NEG_INF, b=POS_INF, lo_closed=True, hi_closed=True) -> MeasureExpr:
    return Weighted(ONE, LebesgueDensity(interval(a, b, lo_closed, hi_closed)))


def lebesgue_on(region: SetExpr) -> MeasureExpr:
    return Weighted(ONE, LebesgueDensity(region))


def uniform(a, b) -> MeasureExpr:
    """The uniform probability measure on [a, b]."""
    a, b = Fraction(a), Fraction(b)
    if a == b:
        raise TypeMismatch("degenerate uniform interval")
    lo, hi = min(a, b), max(a, b)
    supp = interval(lo, hi)
    return Weighted(ONE, LebesgueDensity(supp, ExtLit(REAL, 1 / (hi - lo))))


def density_measure(support: SetExpr, density) -> MeasureExpr:
    return Weighted(ONE, LebesgueDensity(support, density))


def counting_fin(space: Fin, members=None) -> MeasureExpr:
    s = FullSet(space) if members is None else fin_set(space, members)
    return Weighted(ONE, CountingFin(s))


def counting_nat(members=None, cofinite=False) -> MeasureExpr:
    s = FullSet(NAT) if members is None else nat_set(members, cofinite)
    return Weighted(ONE, CountingNat(s))


def normal_measure(mean, sd) -> MeasureExpr:
    dens = PdfNormal(Id(REAL), Const(REAL, mean, REAL), Const(REAL, sd, REAL))
    return Weighted(ONE, LebesgueDensity(FullSet(REAL), dens))


def beta_measure(a, b) -> MeasureExpr:
    dens = PdfBeta(Id(REAL), Const(REAL, a, REAL), Const(REAL, b, REAL))
    return Weighted(ONE, LebesgueDensity(interval(0, 1), dens))


def poisson_measure(rate) -> MeasureExpr:
    pmf = PdfPoisson(Id(NAT), Const(NAT, rate, REAL))

    def gen(n):
        return Weighted(as_weight(eval_fn(pmf, n)), DiracB(n, NAT))

    def tail(n):
        # sum_{k>=n} pmf(k) <= pmf(n) / (1 - rate/(n+1)) once n+1 > rate
        if n == 0:
            return ONE
        if n <= rate:
            return ONE
        p = float(as_weight(eval_fn(pmf, n)))
        return ExtReal(min(1.0, p / (1.0 - rate / (n + 1))))

    return SeqSum(NAT, gen, tail, family=("nat-pmf", pmf, FullSet(NAT), True))


def zero_measure(space: SpaceExpr) -> MeasureExpr:
    return ZeroMeasure(space)


def scale_measure(w, mu: MeasureExpr) -> MeasureExpr:
    w = as_ext(w)
    if w.is_zero or isinstance(mu, ZeroMeasure):
        return ZeroMeasure(mu.space)
    if isinstance(mu, Weighted):
        return Weighted(ext_mul(w, mu.weight), mu.base)
    if isinstance(mu, FiniteSum):
        return FiniteSum(tuple(scale_measure(w, p) for p in mu.parts))
    if isinstance(mu, SeqSum):
        return SeqSum(
            mu.space,
            lambda n: scale_measure(w, mu.gen(n)),
            (lambda n: ext_mul(w, as_ext(mu.tail_bound(n)))),
            family=("scaled", w, mu),
        )
    raise TypeMismatch(f"not a measure expression: {mu!r}")


def sum_measures(parts, space=None) -> MeasureExpr:
    parts = [p for p in parts if not isinstance(p, ZeroMeasure)]
    if not parts:
        if space is None:
            raise TypeMismatch("empty sum needs an explicit space")
        return ZeroMeasure(space)
    if len(parts) == 1:
        return parts[0]
    flat = []
    for p in parts:
        if isinstance(p, FiniteSum):
            flat.extend(p.parts)
        else:
            flat.append(p)
    return FiniteSum(tuple(flat))


def constant_repeat(mu0: MeasureExpr) -> MeasureExpr:
    """Sigma_n mu0: the lazy sum of countably many copies of mu0."""
    return SeqSum(
        mu0.space, lambda n: mu0, lambda n: INF, family=("const-repeat", mu0)
    )


def geometric_weights(ratio, mu0: MeasureExpr) -> MeasureExpr:
    """Sigma_n ratio^n * mu0 for 0 < ratio < 1."""
    ratio = Fraction(ratio)
    if not 0 < ratio < 1:
        raise TypeMismatch("geometric ratio must be in (0, 1)")
    m0 = total_mass(mu0)

    def tail(n):
        return ext_mul(m0.value + m0.error_bound, ratio**n / (1 - ratio))

    return SeqSum(
        mu0.space,
        lambda n: scale_measure(ratio**n, mu0),
        tail,
        family=("geometric", ratio, mu0),
    )


def disjoint_windows(space, gen, masses_bound=None) -> MeasureExpr:
    """A lazy sum whose pieces are promised pairwise disjointly supported
    with finite masses (the sigma-finite presentation shape)."""
    return SeqSum(space, gen, lambda n: INF, family=("windows", gen))


def prod_measure(mu: MeasureExpr, nu: MeasureExpr) -> MeasureExpr:
    """Independent product, built piecewise on bases."""
    space = Prod(mu.space, nu.space)
    if isinstance(mu, ZeroMeasure) or isinstance(nu, ZeroMeasure):
        return ZeroMeasure(space)
    if isinstance(mu, Weighted) and isinstance(nu, Weighted):
        return Weighted(ext_mul(mu.weight, nu.weight), ProductBase(mu.base, nu.base))
    if isinstance(mu, FiniteSum):
        return sum_measures([prod_measure(p, nu) for p in mu.parts], space)
    if isinstance(nu, FiniteSum):
        return sum_measures([prod_measure(mu, p) for p in nu.parts], space)
    if isinstance(mu, SeqSum):
        nu_mass = total_mass(nu)
        return SeqSum(
            space,
            lambda n: prod_measure(mu.gen(n), nu),
            lambda n: ext_mul(as_ext(mu.tail_bound(n)), nu_mass.value + nu_mass.error_bound),
            family=("prod-left", mu, nu),
        )
    if isinstance(nu, SeqSum):
        mu_mass = total_mass(mu)
        return SeqSum(
            space,
            lambda n: prod_measure(mu, nu.gen(n)),
            lambda n: ext_mul(as_ext(nu.tail_bound(n)), mu_mass.value + mu_mass.error_bound),
            family=("prod-right", mu, nu),
        )
    raise TypeMismatch("cannot form the product measure")


def total_mass(mu: MeasureExpr, tol=DEFAULT_TOL, max_terms=DEFAULT_MAX_TERMS) -> EvalResult:
    return _measure_of(mu, FullSet(mu.space), tol, max_terms)


def restrict_measure(mu: MeasureExpr, A: SetExpr) -> MeasureExpr:
    """mu restricted to A (score by the indicator of A)."""
    if A.space != mu.space:
        raise TypeMismatch("restriction set on the wrong space")
    if isinstance(A, FullSet):
        return mu
    if isinstance(A, EmptySet) or isinstance(mu, ZeroMeasure):
        return ZeroMeasure(mu.space)
    if isinstance(mu, FiniteSum):
        return sum_measures([restrict_measure(p, A) for p in mu.parts], mu.space)
    if isinstance(mu, SeqSum):
        return SeqSum(
            mu.space,
            lambda n: restrict_measure(mu.gen(n), A),
            mu.tail_bound,
            family=("restricted", A, mu),
        )
    b = mu.base
    w = mu.weight
    if isinstance(b, DiracB):
        return Weighted(w, b) if member(A, b.point) else ZeroMeasure(mu.space)
    if isinstance(b, CountingFin):
        return Weighted(w, CountingFin(intersect(b.set_expr, A)))
    if isinstance(b, CountingNat):
        return Weighted(w, CountingNat(intersect(b.set_expr, A)))
    if isinstance(b, LebesgueDensity):
        region = intersect(b.support, A)
        if is_empty_set(region):
            return ZeroMeasure(mu.space)
        return Weighted(w, LebesgueDensity(region, b.density))
    if isinstance(b, (ProductBase, JointDensity)):
        rects = disjoint_rectangles(A)
        out = []
        for ra, rb in rects:
            if isinstance(b, ProductBase):
                l = restrict_measure(Weighted(ONE, b.left), ra)
                r = restrict_measure(Weighted(ONE, b.right), rb)
                if isinstance(l, ZeroMeasure) or isinstance(r, ZeroMeasure):
                    continue
                out.append(Weighted(ext_mul(w, ext_mul(l.weight, r.weight)),
                                    ProductBase(l.base, r.base)))
            else:
                region = intersect(b.support, rectangle(ra, rb))
                if not is_empty_set(region):
                    out.append(Weighted(w, JointDensity(region, b.density)))
        return sum_measures(out, mu.space)
    raise TypeMismatch(f"not a base measure: {b!r}")


# ---------------------------------------------------------------------------
# normal form


@dataclass
class NormalForm:
    """Finitely many weighted pieces plus lazy remainders whose families
    certify sigma-finiteness (vanishing tails or disjoint windows)."""

    pieces: list  # [(ExtReal weight, BaseMeasure)]
    lazy: list  # [SeqSum]

    @property
    def infinite_pieces(self):
        return [(w, b) for w, b in self.pieces if w.is_inf]

    @property
    def finite_pieces(self):
        return [(w, b) for w, b in self.pieces if not w.is_inf]


def normalize(mu: MeasureExpr) -> NormalForm:
    pieces = []
    lazy = []
    _normalize_into(mu, ONE, pieces, lazy)
    return NormalForm(pieces, lazy)


def _normalize_into(mu, scale, pieces, lazy):
    scale = as_ext(scale)
    if scale.is_zero or isinstance(mu, ZeroMeasure):
        return
    if isinstance(mu, Weighted):
        w = ext_mul(scale, mu.weight)
        if w.is_zero:
            return
        _normalize_base(w, mu.base, pieces)
        return
    if isinstance(mu, FiniteSum):
        for p in mu.parts:
            _normalize_into(p, scale, pieces, lazy)
        return
    if isinstance(mu, SeqSum):
        fam = mu.family
        if fam and fam[0] == "const-repeat":
            _normalize_into(fam[1], ext_mul(scale, INF), pieces, lazy)
            return
        if fam and fam[0] == "geometric":
            ratio = fam[1]
            _normalize_into(fam[2], ext_mul(scale, Fraction(1) / (1 - ratio)), pieces, lazy)
            return
        if fam and fam[0] == "scaled":
            _normalize_into(fam[2], ext_mul(scale, fam[1]), pieces, lazy)
            return
        if fam and fam[0] == "restricted":
            inner = normalize(fam[2])
            A = fam[1]
            for w, b in inner.pieces:
                restricted = restrict_measure(Weighted(w, b), A)
                _normalize_into(restricted, scale, pieces, lazy)
            for lz in inner.lazy:
                lazy.append(
                    SeqSum(lz.space, lambda n, lz=lz, A=A: restrict_measure(lz.gen(n), A),
                           lz.tail_bound, family=lz.family)
                )
            return
        if fam and fam[0] in ("nat-pmf", "windows"):
            if scale == ONE:
                lazy.append(mu)
            else:
                lazy.append(
                    SeqSum(mu.space, lambda n: scale_measure(scale, mu.gen(n)),
                           lambda n: ext_mul(scale, as_ext(mu.tail_bound(n))),
                           family=mu.family)
                )
            return
        # generic lazy sum: closable only when the tail hits zero exactly
        for n in range(10_000):
            if as_ext(mu.tail_bound(n)).is_zero:
                for i in range(n):
                    _normalize_into(mu.gen(i), scale, pieces, lazy)
                return
        raise Unsupported("cannot normalise a lazy sum with a non-vanishing tail")
    raise TypeMismatch(f"not a measure expression: {mu!r}")


def _normalize_base(w, b, pieces):
    """Append (w, b), extracting infinite piecewise-density regions into
    infinite-weight pieces so that infinities always sit in weights."""
    if isinstance(b, LebesgueDensity) and b.density is not None:
        parts = piecewise_constant_parts(b.density)
        if parts is not None:
            for s, v in parts:
                region = intersect(b.support, s)
                if is_empty_set(region):
                    continue
                pieces.append((ext_mul(w, v), LebesgueDensity(region)))
            return
    pieces.append((w, b))


# ---------------------------------------------------------------------------
# supports and singletons


def singleton_set(p, space: SpaceExpr) -> SetExpr:
    if isinstance(space, Unit):
        return FullSet(space)
    if isinstance(space, Fin):
        return fin_set(space, {p})
    if isinstance(space, Nat):
        return nat_set({p})
    if isinstance(space, Real):
        return real_atoms([p])
    if isinstance(space, Prod):
        return rectangle(
            singleton_set(p[0], space.left), singleton_set(p[1], space.right)
        )
    if isinstance(space, Sum):
        if isinstance(p, Inl):
            return sum_set(space, singleton_set(p.value, space.left), EmptySet(space.right))
        return sum_set(space, EmptySet(space.left), singleton_set(p.value, space.right))
    raise TypeMismatch(f"not a space: {space!r}")


def base_support(b: BaseMeasure) -> SetExpr:
    if isinstance(b, DiracB):
        return singleton_set(b.point, b.space)
    if isinstance(b, (CountingFin, CountingNat)):
        return b.set_expr
    if isinstance(b, LebesgueDensity):
        if b.density is None:
            return b.support
        parts = piecewise_constant_parts(b.density)
        if parts is not None:
            pos = [s for s, v in parts if not v.is_zero]
            return intersect(b.support, union_all(pos, REAL))
        return b.support
    if isinstance(b, ProductBase):
        return rectangle(base_support(b.left), base_support(b.right))
    if isinstance(b, JointDensity):
        return b.support
    raise TypeMismatch(f"not a base measure: {b!r}")


def support_set(mu: MeasureExpr) -> SetExpr:
    """A measurable set carrying all of mu's mass (structural; for lazy
    sums with certified families, the union of the pieces' supports when
    finitely describable)."""
    nf = normalize(mu)
    parts = [base_support(b) for w, b in nf.pieces]
    for lz in nf.lazy:
        fam = lz.family
        if fam and fam[0] == "nat-pmf":
            parts.append(fam[2])
        else:
            raise Unsupported("support of a lazy window family")
    return union_all(parts, mu.space)


def base_atoms(b: BaseMeasure):
    """The atom points of a base, with their unit masses; None if the base
    is continuous (charges no singleton)."""
    if isinstance(b, DiracB):
        return [b.point]
    if isinstance(b, (CountingFin, CountingNat)):
        s = b.set_expr
        if isinstance(s, FullSet) and isinstance(b, CountingFin):
            return list(s.space.labels)
        if isinstance(b, CountingNat) and (isinstance(s, FullSet) or s.cofinite):
            return None  # infinitely many atoms
        return enumerate_set(s)
    if isinstance(b, LebesgueDensity):
        return []
    if isinstance(b, ProductBase):
        la = base_atoms(b.left)
        ra = base_atoms(b.right)
        if la is None or ra is None:
            return None
        if la == [] or ra == []:
            return []
        return [(x, y) for x in la for y in ra]
    if isinstance(b, JointDensity):
        return []
    raise TypeMismatch(f"not a base measure: {b!r}")


def base_charges_point(b: BaseMeasure, p) -> bool:
    r = _base_measure_of(b, singleton_set(p, b.space), DEFAULT_TOL, DEFAULT_MAX_TERMS)
    return not r.value.is_zero


# ---------------------------------------------------------------------------
# top 0-inf sets, classification, approximability


def top_zero_infty_set(mu: MeasureExpr) -> SetExpr:
    """The almost-everywhere greatest set all of whose measurable subsets
    get measure 0 or inf: the union of the infinite-weight pieces'
    supports, minus the finitely-charged atoms inside it that no infinite
    piece charges."""
    nf = normalize(mu)
    space = mu.space
    inf_pieces = nf.infinite_pieces
    if not inf_pieces:
        return EmptySet(space)
    s_inf = union_all([base_support(b) for _, b in inf_pieces], space)

    exclusions = []
    finite_atom_sources = []
    for w, b in nf.finite_pieces:
        atoms = base_atoms(b)
        if atoms is None:
            fam_supp = base_support(b)
            # infinitely many atoms: only safe if the infinite pieces charge
            # every point of the overlap (атомic infinite support)
            overlap = intersect(fam_supp, s_inf)
            if not is_empty_set(overlap) and not _charges_all_points(inf_pieces, overlap):
                raise Unsupported(
                    "top 0-inf set with infinitely many finite atoms against "
                    "a continuous infinite part"
                )
            continue
        finite_atom_sources.extend(atoms)
    for lz in nf.lazy:
        fam = lz.family
        if fam and fam[0] == "nat-pmf":
            overlap = intersect(fam[2], s_inf)
            if not is_empty_set(overlap) and not _charges_all_points(inf_pieces, overlap):
                raise Unsupported("top 0-inf set against an unbounded pmf family")
        elif fam and fam[0] == "windows":
            # windows are promised continuous/disjoint; their atoms would
            # need the same treatment
            pass
    for p in finite_atom_sources:
        if member(s_inf, p) and not any(
            base_charges_point(b, p) for _, b in inf_pieces
        ):
            exclusions.append(p)
    if not exclusions:
        return s_inf
    excl = union_all([singleton_set(p, space) for p in exclusions], space)
    return difference(s_inf, excl)


def _charges_all_points(inf_pieces, s: SetExpr) -> bool:
    """True when the infinite pieces charge every singleton of s (only
    decidable for atomic supports)."""
    try:
        pts = enumerate_set(s)
    except TypeMismatch:
        return False
    return all(
        any(base_charges_point(b, p) for _, b in inf_pieces) for p in pts
    )


PROBABILITY = "Probability"
SUBPROBABILITY = "Subprobability"
FINITE = "Finite"
SIGMA_FINITE = "SigmaFinite"
S_FINITE = "SFinite"


def _known_unit_mass(mu: MeasureExpr) -> bool:
    """Structural recognition of normalised families (their densities are
    normalised by construction, so the quadrature wobble is not evidence
    against mass one)."""
    if isinstance(mu, Weighted) and mu.weight == ONE:
        b = mu.base
        if isinstance(b, LebesgueDensity) and isinstance(b.density, PdfNormal):
            return isinstance(b.support, FullSet)
        if isinstance(b, LebesgueDensity) and isinstance(b.density, PdfBeta):
            open_unit = interval(0, 1, False, False)
            return intersect(b.support, open_unit) == open_unit
        if isinstance(b, ProductBase):
            return _known_unit_mass(Weighted(ONE, b.left)) and _known_unit_mass(
                Weighted(ONE, b.right)
            )
    if isinstance(mu, SeqSum) and mu.family and mu.family[0] == "nat-pmf":
        return len(mu.family) > 3 and mu.family[3] is True and isinstance(
            mu.family[2], FullSet
        )
    return False


def classify_measure(mu: MeasureExpr, tol=DEFAULT_TOL, max_terms=DEFAULT_MAX_TERMS) -> str:
    """The strongest certifiable label; sound, never stronger than true."""
    if isinstance(mu, ZeroMeasure):
        return SUBPROBABILITY
    if _known_unit_mass(mu):
        return PROBABILITY
    # the mass probe only decides between the finite labels; a bounded
    # term budget keeps non-vanishing lazy sums from stalling it
    mass = total_mass(mu, tol, min(max_terms, 2000))
    if mass.mode == EXACT:
        if mass.value == ONE:
            return PROBABILITY
        if mass.value <= ONE:
            return SUBPROBABILITY
        if not mass.value.is_inf:
            return FINITE
    elif mass.mode == TRUNCATED and not mass.value.is_inf:
        upper = mass.value + mass.error_bound
        if upper <= ONE:
            return SUBPROBABILITY
        if not upper.is_inf:
            return FINITE
    try:
        top = top_zero_infty_set(mu)
    except Unsupported:
        return S_FINITE
    if isinstance(top, EmptySet):
        return SIGMA_FINITE
    # a nonempty top set may still be mu-null; check before refusing
    r = measure_of(mu, top, tol, max_terms)
    if r.mode == EXACT and r.value.is_zero:
        return SIGMA_FINITE
    return S_FINITE


def finitely_approximable(mu: MeasureExpr, A: SetExpr, tol=DEFAULT_TOL, max_terms=DEFAULT_MAX_TERMS) -> bool:
    """Whether mu(A) is the sup of finite measures of subsets: false
    exactly when A meets the top 0-inf set non-negligibly."""
    top = top_zero_infty_set(mu)
    hit = intersect(A, top)
    if is_empty_set(hit):
        return True
    r = measure_of(mu, hit, tol, max_terms)
    return r.value.is_zero


# ---------------------------------------------------------------------------
# subprobability splitting


def as_subprob_sum(mu: MeasureExpr, tol=DEFAULT_TOL):
    """Lazily split mu into pieces of mass at most one whose sum denotes
    mu; infinite-weight pieces become constant repetitions of unit
    pieces."""
    if isinstance(mu, ZeroMeasure):
        return
    if isinstance(mu, Weighted):
        yield from _split_weighted(mu.weight, mu.base, tol)
        return
    if isinstance(mu, FiniteSum):
        yield from _interleave([as_subprob_sum(p, tol) for p in mu.parts])
        return
    if isinstance(mu, SeqSum):
        yield from _interleave_lazy(mu, tol)
        return
    raise TypeMismatch(f"not a measure expression: {mu!r}")


def _interleave(gens):
    """Diagonal interleaving of finitely many generators."""
    gens = [iter(g) for g in gens]
    while gens:
        alive = []
        for g in gens:
            try:
                yield next(g)
                alive.append(g)
            except StopIteration:
                pass
        gens = alive


def _interleave_lazy(mu: SeqSum, tol):
    """Diagonal interleaving over countably many piece generators."""
    gens = []
    n = 0
    exhausted = False
    idle_rounds = 0
    while True:
        if not exhausted:
            if as_ext(mu.tail_bound(n)).is_zero:
                exhausted = True
            else:
                gens.append(iter(as_subprob_sum(mu.gen(n), tol)))
                n += 1
        alive = []
        emitted = False
        for g in gens:
            try:
                yield next(g)
                emitted = True
                alive.append(g)
            except StopIteration:
                pass
        gens = alive
        if exhausted and not gens:
            return
        idle_rounds = 0 if emitted else idle_rounds + 1
        if idle_rounds > 100_000:
            raise Unsupported("lazy sum yields no mass but its tail bound never vanishes")


def _split_weighted(w, b, tol, depth=0):
    if depth > 4:
        raise Unsupported("cannot split this base into finite-mass segments")
    mass = _base_measure_of(b, FullSet(b.space), tol, DEFAULT_MAX_TERMS)
    m = mass.value
    if m.is_zero:
        return
    if not w.is_inf and not m.is_inf:
        total = ext_mul(w, m)
        if total <= ONE:
            yield Weighted(w, b)
            return
        # greedy unit-mass slices: weights 1/m, then the remainder
        from .extreal import ext_div

        unit_w = ext_div(ONE, m)
        whole = int(float(total))
        if total.is_exact and Fraction(whole) == total.v:
            rem = ZERO
        elif total.is_exact:
            rem = ExtReal(total.v - whole)
        else:
            rem = ExtReal(max(0.0, float(total) - whole))
        for _ in range(whole):
            yield Weighted(unit_w, b)
        if not rem.is_zero:
            yield Weighted(ext_div(rem, m), b)
        return
    if not w.is_inf:
        # finite weight on an infinite-mass base: scaled segments, once
        for seg_w, seg_b in _unit_segments(b, tol):
            yield from _split_weighted(ext_mul(w, seg_w), seg_b, tol, depth + 1)
        return
    if not m.is_inf:
        # infinite weight on a finite-mass base: unit copies forever
        while True:
            yield from _split_weighted(ONE, b, tol, depth + 1)
    # infinite weight on an infinite-mass base: every segment must recur
    # infinitely often (diagonal order over copies x segments)
    segsrc = _unit_segments(b, tol)
    cache = []

    def seg(i):
        while len(cache) <= i:
            try:
                cache.append(next(segsrc))
            except StopIteration:
                return None
        return cache[i]

    for d in itertools.count():
        for k in range(d + 1):
            s = seg(k)
            if s is None:
                if k == 0:
                    return
                break
            yield from _split_weighted(s[0], s[1], tol, depth + 1)


def _unit_segments(b: BaseMeasure, tol):
    """Cut an infinite-mass base into finite-mass segments."""
    if isinstance(b, CountingNat):
        s = b.set_expr
        excluded = set() if isinstance(s, FullSet) else set(s.members)
        if not isinstance(s, FullSet) and not s.cofinite:
            yield (ONE, b)
            return
        n = 0
        while True:
            if n not in excluded:
                yield (ONE, DiracB(n, NAT))
            n += 1
    elif isinstance(b, LebesgueDensity):
        # unit windows 0,[0,1); 1,[-1,0); 2,[1,2); ...
        for k in itertools.count():
            half, idx = divmod(k, 2)
            if idx == 0:
                win = interval(half, half + 1, True, False)
            else:
                win = interval(-half - 1, -half, True, False)
            region = intersect(b.support, win)
            if is_empty_set(region):
                # keep scanning; support may be bounded: stop once both
                # directions are past the support
                if _support_exhausted(b.support, half):
                    return
                continue
            yield (ONE, LebesgueDensity(region, b.density))
    elif isinstance(b, DiracB):
        yield (ONE, b)
    elif isinstance(b, CountingFin):
        yield (ONE, b)
    elif isinstance(b, ProductBase):
        # segment the infinite side
        lm = _base_measure_of(b.left, FullSet(b.left.space), tol, DEFAULT_MAX_TERMS)
        if lm.value.is_inf:
            for w, seg in _unit_segments(b.left, tol):
                yield (w, ProductBase(seg, b.right))
        else:
            for w, seg in _unit_segments(b.right, tol):
                yield (w, ProductBase(b.left, seg))
    else:
        raise Unsupported(f"cannot segment {type(b).__name__}")


def _support_exhausted(support: SetExpr, half) -> bool:
    if isinstance(support, FullSet):
        return False
    hi = max((iv.hi for iv in support.intervals), default=None)
    lo = min((iv.lo for iv in support.intervals), default=None)
    for a in support.atoms_in:
        hi = a if hi is None else max(hi, a)
        lo = a if lo is None else min(lo, a)
    if hi is None:
        return True
    if hi == POS_INF or lo == NEG_INF:
        return False
    return half > float(hi) + 1 and -float(half) < float(lo) - 1


def measures_agree(a: MeasureExpr, b: MeasureExpr, probes=None, tol=1e-6) -> bool:
    """Extensional agreement on a canonical probe family: exact equality
    when both evaluations are exact, within tol otherwise."""
    if a.space != b.space:
        return False
    if probes is None:
        hints = []
        for m in (a, b):
            try:
                hints.extend(_support_hints(m))
            except Unsupported:
                pass
        probes = canonical_probes(a.space, hints)
    for s in probes:
        ra = measure_of(a, s, tol=min(tol, DEFAULT_TOL))
        rb = measure_of(b, s, tol=min(tol, DEFAULT_TOL))
        if ra.value.is_inf or rb.value.is_inf:
            if ra.value.is_inf != rb.value.is_inf:
                return False
            continue
        if ra.mode == EXACT and rb.mode == EXACT:
            if ra.value != rb.value:
                return False
        elif abs(float(ra.value) - float(rb.value)) > tol:
            return False
    return True


def _support_hints(mu: MeasureExpr):
    hints = []
    nf = normalize(mu)
    for w, b in nf.pieces:
        if isinstance(b, DiracB) and isinstance(b.point, (int, Fraction)):
            hints.append(b.point)
        if isinstance(b, LebesgueDensity) and not isinstance(b.support, (FullSet, EmptySet)):
            for iv in b.support.intervals:
                from .sets import NEG_INF, POS_INF

                if iv.lo not in (NEG_INF, POS_INF) and not isinstance(iv.lo, float):
                    hints.append(iv.lo)
                if iv.hi not in (NEG_INF, POS_INF) and not isinstance(iv.hi, float):
                    hints.append(iv.hi)
    return hints


# ---------------------------------------------------------------------------
# canonical probes (test support)


def canonical_probes(space: SpaceExpr, hints=()):
    """A finite family of sets for extensional comparisons on a space."""
    if isinstance(space, Unit):
        return [FullSet(space)]
    if isinstance(space, Fin):
        singles = [fin_set(space, {l}) for l in space.labels]
        return singles + [FullSet(space)]
    if isinstance(space, Nat):
        return (
            [nat_set({n}) for n in range(8)]
            + [nat_set(set(range(8)), cofinite=True), FullSet(space)]
        )
    if isinstance(space, Real):
        pts = sorted({Fraction(h) for h in hints if isinstance(h, (int, Fraction))} | {
            Fraction(k, 2) for k in range(-6, 7)
        })
        probes = [real_atoms([p]) for p in pts[:6]]
        for a, b in zip(pts, pts[2:]):
            probes.append(interval(a, b, True, False))
        probes.append(interval(Fraction(-10), Fraction(10)))
        probes.append(FullSet(space))
        return probes
    if isinstance(space, Prod):
        lefts = canonical_probes(space.left, hints)
        rights = canonical_probes(space.right, hints)
        out = []
        for a in lefts[:4]:
            for b in rights[:4]:
                out.append(prod_set(space, [(a, b)]))
        out.append(FullSet(space))
        return out
    if isinstance(space, Sum):
        return (
            [sum_set(space, a, EmptySet(space.right)) for a in canonical_probes(space.left, hints)[:4]]
            + [sum_set(space, EmptySet(space.left), b) for b in canonical_probes(space.right, hints)[:4]]
            + [FullSet(space)]
        )
    raise TypeMismatch(f"not a space: {space!r}")

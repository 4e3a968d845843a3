"""The kernel algebra: parameterised measures closed under composition,
pushforward/pullback, score, sums, and left/right products.

Every constructor preserves s-finiteness, and eval_kernel(k, x) yields a
closed measure term for each point of the domain.  Classification labels
are computed structurally and are sound: a kernel is never labelled with
a stronger class than can be certified from its representation.

Support analysis, mutual singularity, absolute continuity (plain and
0-inf), the {1, inf}-factorisation, and sigma-finite presentations all
operate on a structured fragment — constant kernels, parameterised
pieces with constant positions, and their sums — and raise Unsupported
outside it rather than guessing.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import TypeMismatch, Unsupported
from .extreal import INF, ONE, ZERO, ExtReal, as_ext, ext_div, ext_mul
from .funcs import (
    Compose,
    Const,
    ExtLit,
    ExtMulFn,
    FnExpr,
    Id,
    IfSet,
    Indicator,
    NatOfFloor,
    PairFn,
    PdfNormal,
    Proj1,
    Proj2,
    RestrictTo,
    as_affine,
    as_weight,
    eval_fn,
    partial_left,
    partial_right,
    preimage,
)
from .measures import (
    CountingFin,
    CountingNat,
    DEFAULT_MAX_TERMS,
    DEFAULT_TOL,
    DiracB,
    EvalResult,
    FiniteSum,
    JointDensity,
    LebesgueDensity,
    MeasureExpr,
    ProductBase,
    SeqSum,
    Weighted,
    ZeroMeasure,
    as_subprob_sum,
    base_support,
    classify_measure,
    dirac,
    integrate,
    measure_of,
    normalize,
    piecewise_constant_parts,
    prod_measure,
    restrict_measure,
    scale_measure,
    singleton_set,
    sum_measures,
    support_set,
    top_zero_infty_set,
    total_mass,
    PROBABILITY,
    SUBPROBABILITY,
    FINITE,
    SIGMA_FINITE,
    S_FINITE,
)
from .sets import (
    EmptySet,
    FullSet,
    SetExpr,
    difference,
    enumerate_set,
    intersect,
    is_empty_set,
    lebesgue_length,
    member,
    rectangle,
    union,
    union_all,
)
from .spaces import (
    BOTTOM,
    Fin,
    NAT,
    Nat,
    Prod,
    REAL,
    Real,
    SpaceExpr,
    Unit,
    UNIT,
    check_point,
    is_finite_space,
)


# ---------------------------------------------------------------------------
# parameterised measure templates


class PMBase:
    """A base measure whose data may depend on the kernel input."""

    __slots__ = ()


@dataclass(frozen=True)
class PMClosed(PMBase):
    base: object  # BaseMeasure


@dataclass(frozen=True)
class PMDirac(PMBase):
    position: FnExpr  # param -> target


@dataclass(frozen=True)
class PMDensity(PMBase):
    support: SetExpr  # on Real
    density: FnExpr  # Prod(param, Real) -> [0, inf]


@dataclass(frozen=True)
class PMProd(PMBase):
    left: PMBase
    right: PMBase


@dataclass(frozen=True)
class PMPiece:
    weight: object  # ExtReal or FnExpr param -> [0, inf]
    base: PMBase


def _pm_target(base: PMBase):
    if isinstance(base, PMClosed):
        return base.base.space
    if isinstance(base, PMDirac):
        return base.position.cod
    if isinstance(base, PMDensity):
        return REAL
    if isinstance(base, PMProd):
        return Prod(_pm_target(base.left), _pm_target(base.right))
    raise TypeMismatch(f"not a template base: {base!r}")


def _pm_close(base: PMBase, x):
    if isinstance(base, PMClosed):
        return base.base
    if isinstance(base, PMDirac):
        v = eval_fn(base.position, x)
        if v is BOTTOM:
            return None
        return DiracB(v, base.position.cod)
    if isinstance(base, PMDensity):
        return LebesgueDensity(base.support, partial_left(base.density, x))
    if isinstance(base, PMProd):
        l = _pm_close(base.left, x)
        r = _pm_close(base.right, x)
        if l is None or r is None:
            return None
        return ProductBase(l, r)
    raise TypeMismatch(f"not a template base: {base!r}")


# ---------------------------------------------------------------------------
# kernel expressions


class KernelExpr:
    __slots__ = ()

    dom: SpaceExpr
    cod: SpaceExpr


@dataclass(frozen=True)
class ZeroK(KernelExpr):
    _dom: SpaceExpr
    _cod: SpaceExpr

    @property
    def dom(self):
        return self._dom

    @property
    def cod(self):
        return self._cod


@dataclass(frozen=True)
class Det(KernelExpr):
    """The deterministic (sub)probability kernel of a partial function."""

    fn: FnExpr

    @property
    def dom(self):
        return self.fn.dom

    @property
    def cod(self):
        return self.fn.cod


@dataclass(frozen=True)
class ConstK(KernelExpr):
    _dom: SpaceExpr
    measure: MeasureExpr

    @property
    def dom(self):
        return self._dom

    @property
    def cod(self):
        return self.measure.space


@dataclass(frozen=True)
class ParamK(KernelExpr):
    _dom: SpaceExpr
    pieces: tuple  # of PMPiece

    def __post_init__(self):
        for p in self.pieces:
            if isinstance(p.weight, FnExpr) and p.weight.dom != self._dom:
                raise TypeMismatch("template weight on the wrong parameter space")

    @property
    def dom(self):
        return self._dom

    @property
    def cod(self):
        return _pm_target(self.pieces[0].base)


@dataclass(frozen=True)
class ComposeK(KernelExpr):
    first: KernelExpr
    second: KernelExpr

    def __post_init__(self):
        if self.first.cod != self.second.dom:
            raise TypeMismatch(
                f"cannot compose kernels: {self.first.cod!r} vs {self.second.dom!r}"
            )

    @property
    def dom(self):
        return self.first.dom

    @property
    def cod(self):
        return self.second.cod


@dataclass(frozen=True)
class PushK(KernelExpr):
    kernel: KernelExpr
    fn: FnExpr

    def __post_init__(self):
        if self.fn.dom != self.kernel.cod:
            raise TypeMismatch("pushforward function on the wrong space")

    @property
    def dom(self):
        return self.kernel.dom

    @property
    def cod(self):
        return self.fn.cod


@dataclass(frozen=True)
class PullK(KernelExpr):
    fn: FnExpr
    kernel: KernelExpr

    def __post_init__(self):
        if self.fn.cod != self.kernel.dom:
            raise TypeMismatch("pullback function into the wrong space")

    @property
    def dom(self):
        return self.fn.dom

    @property
    def cod(self):
        return self.kernel.cod


@dataclass(frozen=True)
class ScoreK(KernelExpr):
    kernel: KernelExpr
    fn: FnExpr  # Prod(dom, cod) -> [0, inf]

    def __post_init__(self):
        expected = Prod(self.kernel.dom, self.kernel.cod)
        if self.fn.dom != expected:
            raise TypeMismatch(
                f"score function must live on {expected!r}, got {self.fn.dom!r}"
            )

    @property
    def dom(self):
        return self.kernel.dom

    @property
    def cod(self):
        return self.kernel.cod


@dataclass(frozen=True)
class SumK(KernelExpr):
    parts: tuple

    def __post_init__(self):
        if not self.parts:
            raise TypeMismatch("SumK needs parts (use ZeroK)")
        d, c = self.parts[0].dom, self.parts[0].cod
        for p in self.parts:
            if p.dom != d or p.cod != c:
                raise TypeMismatch("sum of kernels with different types")

    @property
    def dom(self):
        return self.parts[0].dom

    @property
    def cod(self):
        return self.parts[0].cod


@dataclass(frozen=True, eq=False)
class SeqSumK(KernelExpr):
    _dom: SpaceExpr
    _cod: SpaceExpr
    gen: object  # n -> KernelExpr
    tail_bound: object  # n -> ExtReal, uniform over x
    family: tuple = None

    @property
    def dom(self):
        return self._dom

    @property
    def cod(self):
        return self._cod


@dataclass(frozen=True)
class ProdL(KernelExpr):
    """k (x)^l l: first run k, then l sees the input and k's output."""

    first: KernelExpr  # X ~> Y
    second: KernelExpr  # X x Y ~> Z

    def __post_init__(self):
        if self.second.dom != Prod(self.first.dom, self.first.cod):
            raise TypeMismatch("second factor must consume the pair (input, output)")

    @property
    def dom(self):
        return self.first.dom

    @property
    def cod(self):
        return Prod(self.first.cod, self.second.cod)


@dataclass(frozen=True)
class ProdR(KernelExpr):
    """k (x)^r l with l independent of k's output by construction."""

    first: KernelExpr  # X ~> Y
    second: KernelExpr  # X ~> Z

    def __post_init__(self):
        if self.second.dom != self.first.dom:
            raise TypeMismatch("right product factors must share the domain")

    @property
    def dom(self):
        return self.first.dom

    @property
    def cod(self):
        return Prod(self.first.cod, self.second.cod)


# constructor helpers matching the operation names


def compose(k: KernelExpr, l: KernelExpr) -> KernelExpr:
    return ComposeK(k, l)


def push(k: KernelExpr, f: FnExpr) -> KernelExpr:
    return PushK(k, f)


def pull(g: FnExpr, k: KernelExpr) -> KernelExpr:
    return PullK(g, k)


def score(k: KernelExpr, f: FnExpr) -> KernelExpr:
    return ScoreK(k, f)


def prod_l(k: KernelExpr, l: KernelExpr) -> KernelExpr:
    return ProdL(k, l)


def prod_r(k: KernelExpr, l: KernelExpr) -> KernelExpr:
    return ProdR(k, l)


def const_kernel(dom: SpaceExpr, mu: MeasureExpr) -> KernelExpr:
    return ConstK(dom, mu)


def lift_independent(l: KernelExpr) -> KernelExpr:
    """Turn l: X ~> Z into X x Y ~> Z ignoring the Y coordinate — the shape
    ProdL expects when the second factor is genuinely independent."""
    raise TypeMismatch("lift_independent needs the product domain; use lift_over")


def lift_over(l: KernelExpr, middle: SpaceExpr) -> KernelExpr:
    """l: X ~> Z lifted to X x middle ~> Z (ignores the middle coordinate)."""
    return PullK(Proj1(Prod(l.dom, middle)), l)


# ---------------------------------------------------------------------------
# evaluation


def eval_kernel(k: KernelExpr, x) -> MeasureExpr:
    """The measure k(x, -) as a closed measure term."""
    check_point(x, k.dom)
    return _eval_kernel(k, x)


def _eval_kernel(k, x) -> MeasureExpr:
    if isinstance(k, ZeroK):
        return ZeroMeasure(k.cod)
    if isinstance(k, Det):
        v = eval_fn(k.fn, x)
        if v is BOTTOM:
            return ZeroMeasure(k.cod)
        return dirac(v, k.cod)
    if isinstance(k, ConstK):
        return k.measure
    if isinstance(k, ParamK):
        parts = []
        for piece in k.pieces:
            w = piece.weight
            if isinstance(w, FnExpr):
                w = as_weight(eval_fn(w, x))
            else:
                w = as_ext(w)
            if w.is_zero:
                continue
            b = _pm_close(piece.base, x)
            if b is not None:
                parts.append(Weighted(w, b))
        return sum_measures(parts, k.cod)
    if isinstance(k, ComposeK):
        return bind_measure(_eval_kernel(k.first, x), k.second)
    if isinstance(k, PushK):
        if isinstance(k.fn, Proj2) and isinstance(k.kernel, ProdL):
            # monadic bind: projecting away the bound coordinate lets a
            # scored-deterministic body act by score-then-push
            sd = as_scored_det(k.kernel.second)
            if sd is not None:
                w, pos = sd
                mu = _eval_kernel(k.kernel.first, x)
                if w is not None:
                    mu = score_measure(mu, partial_left(w, x))
                return push_measure(mu, partial_left(pos, x))
        return push_measure(_eval_kernel(k.kernel, x), k.fn)
    if isinstance(k, PullK):
        v = eval_fn(k.fn, x)
        if v is BOTTOM:
            return ZeroMeasure(k.cod)
        return _eval_kernel(k.kernel, v)
    if isinstance(k, ScoreK):
        return score_measure(_eval_kernel(k.kernel, x), partial_left(k.fn, x))
    if isinstance(k, SumK):
        return sum_measures([_eval_kernel(p, x) for p in k.parts], k.cod)
    if isinstance(k, SeqSumK):
        return SeqSum(
            k.cod,
            lambda n: _eval_kernel(k.gen(n), x),
            k.tail_bound,
            family=k.family,
        )
    if isinstance(k, ProdL):
        return prodl_measure(_eval_kernel(k.first, x), k.second, x)
    if isinstance(k, ProdR):
        return prod_measure(_eval_kernel(k.first, x), _eval_kernel(k.second, x))
    raise TypeMismatch(f"not a kernel expression: {k!r}")


# -- score at the measure level ---------------------------------------------


def score_measure(mu: MeasureExpr, g: FnExpr) -> MeasureExpr:
    """Reweight mu by g pointwise."""
    if g.dom != mu.space:
        raise TypeMismatch("score function on the wrong space")
    if isinstance(mu, ZeroMeasure):
        return mu
    if isinstance(mu, FiniteSum):
        return sum_measures([score_measure(p, g) for p in mu.parts], mu.space)
    if isinstance(mu, SeqSum):
        bound = fn_upper_bound(g)
        return SeqSum(
            mu.space,
            lambda n: score_measure(mu.gen(n), g),
            lambda n: ext_mul(as_ext(mu.tail_bound(n)), bound),
            family=("scored-seq", mu, g),
        )
    w, b = mu.weight, mu.base
    return _score_base(w, b, g)


def _score_base(w, b, g) -> MeasureExpr:
    space = b.space
    if isinstance(b, DiracB):
        w2 = ext_mul(w, as_weight(eval_fn(g, b.point)))
        return Weighted(w2, b) if not w2.is_zero else ZeroMeasure(space)
    if isinstance(b, (CountingFin, CountingNat)):
        parts = piecewise_constant_parts(g)
        if parts is not None:
            out = []
            for s, v in parts:
                region = intersect(b.set_expr, s)
                if is_empty_set(region):
                    continue
                w2 = ext_mul(w, v)
                if w2.is_zero:
                    continue
                cls = CountingFin if isinstance(b, CountingFin) else CountingNat
                out.append(Weighted(w2, cls(region)))
            return sum_measures(out, space)
        try:
            pts = enumerate_set(b.set_expr) if not isinstance(b.set_expr, FullSet) else None
        except TypeMismatch:
            pts = None
        if pts is None and isinstance(b, CountingFin):
            pts = list(b.set_expr.space.labels)
        if pts is not None:
            return sum_measures(
                [
                    Weighted(ext_mul(w, as_weight(eval_fn(g, p))), DiracB(p, space))
                    for p in pts
                ],
                space,
            )
        # infinitely many atoms: lazy pmf-style sum
        s = b.set_expr
        excluded = set() if isinstance(s, FullSet) else set(s.members)

        def nth_member(n):
            c = 0
            m = 0
            while True:
                if m not in excluded:
                    if c == n:
                        return m
                    c += 1
                m += 1

        return SeqSum(
            space,
            lambda n: Weighted(
                ext_mul(w, as_weight(eval_fn(g, nth_member(n)))), DiracB(nth_member(n), NAT)
            ),
            lambda n: INF,
            family=("nat-pmf", g, s, False),
        )
    if isinstance(b, LebesgueDensity):
        dens = g if b.density is None else ExtMulFn(b.density, g)
        return Weighted(w, LebesgueDensity(b.support, dens))
    if isinstance(b, JointDensity):
        return Weighted(w, JointDensity(b.support, ExtMulFn(b.density, g)))
    if isinstance(b, ProductBase):
        return _score_product(w, b, g)
    raise TypeMismatch(f"not a base measure: {b!r}")


def _score_product(w, b: ProductBase, g) -> MeasureExpr:
    space = b.space
    left_atoms = _atoms_with_space(b.left)
    if left_atoms is not None:
        out = []
        for p in left_atoms:
            gy = partial_left(g, p)
            scored = _score_base(w, b.right, gy)
            out.append(_embed_left(p, b.left.space, scored))
        return sum_measures(out, space)
    right_atoms = _atoms_with_space(b.right)
    if right_atoms is not None:
        out = []
        for p in right_atoms:
            gx = partial_right(g, p)
            scored = _score_base(w, b.left, gx)
            out.append(_embed_right(scored, p, b.right.space))
        return sum_measures(out, space)
    if isinstance(b.left, CountingNat):
        s = b.left.set_expr
        excluded = set() if isinstance(s, FullSet) else set(s.members)
        members = (m for m in itertools.count() if m not in excluded)
        cached = []
        src = iter(members)

        def nth(n):
            while len(cached) <= n:
                cached.append(next(src))
            return cached[n]

        bound = fn_upper_bound(g)
        right = b.right

        def gen(n):
            p = nth(n)
            return _embed_left(p, NAT, _score_base(w, right, partial_left(g, p)))

        return SeqSum(space, gen, lambda n: INF, family=("slices", b.left, right, g))
    if isinstance(b.left, LebesgueDensity) and isinstance(b.right, LebesgueDensity):
        dl = b.left.density
        dr = b.right.density
        parts = [g]
        if dl is not None:
            parts.append(Compose(dl, Proj1(Prod(REAL, REAL))))
        if dr is not None:
            parts.append(Compose(dr, Proj2(Prod(REAL, REAL))))
        dens = parts[0]
        for extra in parts[1:]:
            dens = ExtMulFn(dens, extra)
        supp = rectangle(b.left.support, b.right.support)
        return Weighted(w, JointDensity(supp, dens))
    raise Unsupported("scoring this product base")


def _atoms_with_space(b):
    """Finite atom list of a base, or None."""
    from .measures import base_atoms

    atoms = base_atoms(b)
    if atoms is None or atoms == [] and not isinstance(b, (DiracB, CountingFin, CountingNat)):
        return None if atoms is None else None
    if isinstance(b, (DiracB, CountingFin, CountingNat)):
        return atoms
    return None


def _embed_left(p, p_space, mu: MeasureExpr) -> MeasureExpr:
    """delta_p (x) mu."""
    space = Prod(p_space, mu.space)
    if isinstance(mu, ZeroMeasure):
        return ZeroMeasure(space)
    if isinstance(mu, FiniteSum):
        return sum_measures([_embed_left(p, p_space, q) for q in mu.parts], space)
    if isinstance(mu, SeqSum):
        return SeqSum(
            space,
            lambda n: _embed_left(p, p_space, mu.gen(n)),
            mu.tail_bound,
            family=("embedded", p, mu),
        )
    return Weighted(mu.weight, ProductBase(DiracB(p, p_space), mu.base))


def _embed_right(mu: MeasureExpr, p, p_space) -> MeasureExpr:
    """mu (x) delta_p."""
    space = Prod(mu.space, p_space)
    if isinstance(mu, ZeroMeasure):
        return ZeroMeasure(space)
    if isinstance(mu, FiniteSum):
        return sum_measures([_embed_right(q, p, p_space) for q in mu.parts], space)
    if isinstance(mu, SeqSum):
        return SeqSum(
            space,
            lambda n: _embed_right(mu.gen(n), p, p_space),
            mu.tail_bound,
            family=("embedded-r", p, mu),
        )
    return Weighted(mu.weight, ProductBase(mu.base, DiracB(p, p_space)))


# -- pushforward at the measure level ----------------------------------------


def push_measure(mu: MeasureExpr, f: FnExpr) -> MeasureExpr:
    """The pushforward f_* mu; partial f drops the undefined mass."""
    if f.dom != mu.space:
        raise TypeMismatch("pushforward function on the wrong space")
    if isinstance(mu, ZeroMeasure):
        return ZeroMeasure(f.cod)
    if isinstance(mu, FiniteSum):
        return sum_measures([push_measure(p, f) for p in mu.parts], f.cod)
    if isinstance(mu, SeqSum):
        return SeqSum(
            f.cod,
            lambda n: push_measure(mu.gen(n), f),
            mu.tail_bound,
            family=("pushed", f, mu),
        )
    return _push_base(mu.weight, mu.base, f)


def _push_base(w, b, f: FnExpr) -> MeasureExpr:
    cod = f.cod
    # structural simplifications first
    if isinstance(f, Id):
        return Weighted(w, b)
    if isinstance(f, RestrictTo):
        return restrict_measure(Weighted(w, b), f.set_expr)
    if isinstance(f, Compose):
        return push_measure(_push_base(w, b, f.inner), f.outer)
    if isinstance(f, IfSet):
        inside = restrict_measure(Weighted(w, b), f.cond)
        outside = restrict_measure(Weighted(w, b), _complement(f.cond))
        return sum_measures(
            [push_measure(inside, f.then_fn), push_measure(outside, f.else_fn)],
            cod,
        )
    if isinstance(f, Const):
        mass = _mass_of_base(w, b)
        if mass.is_zero:
            return ZeroMeasure(cod)
        return Weighted(mass, DiracB(f.value, cod))
    if isinstance(cod, Unit):
        mass = _mass_of_base(w, b)
        if mass.is_zero:
            return ZeroMeasure(cod)
        return Weighted(mass, DiracB((), UNIT))
    if isinstance(f, PairFn):
        first, second = f.first, f.second
        if isinstance(first, Const):
            inner = _push_base(w, b, second)
            return _embed_left(first.value, first.cod, inner)
        if isinstance(second, Const):
            inner = _push_base(w, b, first)
            return _embed_right(inner, second.value, second.cod)
        if isinstance(b, ProductBase) and isinstance(first, Proj2) and isinstance(second, Proj1):
            return Weighted(w, ProductBase(b.right, b.left))
        if isinstance(first, Proj1) and isinstance(second, Proj2):
            return Weighted(w, b)
    # atom-by-atom pushes
    if isinstance(b, DiracB):
        v = eval_fn(f, b.point)
        if v is BOTTOM:
            return ZeroMeasure(cod)
        return Weighted(w, DiracB(v, cod))
    if isinstance(b, (CountingFin, CountingNat)):
        try:
            pts = (
                list(b.set_expr.space.labels)
                if isinstance(b.set_expr, FullSet) and isinstance(b, CountingFin)
                else enumerate_set(b.set_expr)
            )
        except TypeMismatch:
            pts = None
        if pts is not None:
            out = []
            for p in pts:
                v = eval_fn(f, p)
                if v is not BOTTOM:
                    out.append(Weighted(w, DiracB(v, cod)))
            return sum_measures(out, cod)
        s = b.set_expr
        excluded = set() if isinstance(s, FullSet) else set(s.members)

        def nth_member(n):
            c = 0
            m = 0
            while True:
                if m not in excluded:
                    if c == n:
                        return m
                    c += 1
                m += 1

        def gen(n):
            v = eval_fn(f, nth_member(n))
            if v is BOTTOM:
                return ZeroMeasure(cod)
            return Weighted(w, DiracB(v, cod))

        return SeqSum(cod, gen, lambda n: INF, family=("pushed-atoms", f, b))
    if isinstance(b, LebesgueDensity):
        return _push_density(w, b, f)
    if isinstance(b, ProductBase):
        if isinstance(f, Proj1):
            rm = _mass_of_base(ONE, b.right)
            return Weighted(ext_mul(w, rm), b.left) if not rm.is_zero else ZeroMeasure(cod)
        if isinstance(f, Proj2):
            lm = _mass_of_base(ONE, b.left)
            return Weighted(ext_mul(w, lm), b.right) if not lm.is_zero else ZeroMeasure(cod)
        left_atoms = _atoms_with_space(b.left)
        if left_atoms is not None:
            out = []
            for p in left_atoms:
                fx = partial_left(f, p)
                out.append(_push_base(w, b.right, fx))
            return sum_measures(out, cod)
        right_atoms = _atoms_with_space(b.right)
        if right_atoms is not None:
            out = []
            for p in right_atoms:
                fy = partial_right(f, p)
                out.append(_push_base(w, b.left, fy))
            return sum_measures(out, cod)
        raise Unsupported(f"pushforward of a product base along {type(f).__name__}")
    if isinstance(b, JointDensity):
        if isinstance(f, Proj1):
            return _joint_marginal(w, b, first=True)
        if isinstance(f, Proj2):
            return _joint_marginal(w, b, first=False)
        raise Unsupported(f"pushforward of a joint density along {type(f).__name__}")
    raise TypeMismatch(f"not a base measure: {b!r}")


def _complement(s):
    from .sets import complement as c

    return c(s)


def _mass_of_base(w, b) -> ExtReal:
    """Total mass of a weighted base (value only; the evaluation error of
    the numeric path is bounded by the default tolerance)."""
    r = measure_of(Weighted(as_ext(w), b), FullSet(b.space))
    return r.value


def _push_density(w, b: LebesgueDensity, f: FnExpr) -> MeasureExpr:
    cod = f.cod
    aff = as_affine(f) if cod == REAL else None
    if aff is not None:
        a, c = aff
        if a == 0:
            mass = _mass_of_base(w, b)
            return Weighted(mass, DiracB(c, REAL)) if not mass.is_zero else ZeroMeasure(REAL)
        inv = _affine_inverse_fn(a, c)
        new_supp = _affine_image(b.support, a, c)
        scale_w = abs(Fraction(1) / Fraction(a)) if not isinstance(a, float) else abs(1.0 / a)
        if b.density is None:
            dens = ExtLit(REAL, scale_w)
        else:
            dens = ExtMulFn(Compose(b.density, inv), ExtLit(REAL, scale_w))
        return Weighted(w, LebesgueDensity(new_supp, dens))
    from .funcs import FloorF

    if isinstance(f, FloorF) or isinstance(f, NatOfFloor):
        inner = f.operand
        if not isinstance(inner, Id):
            return push_measure(
                _push_base(w, b, inner), type(f)(Id(REAL))
            )
        return _push_floor(w, b, into_nat=isinstance(f, NatOfFloor))
    if isinstance(cod, (Fin,)) or (isinstance(cod, Nat)):
        # enumerate target atoms through preimages when the support is bounded
        raise Unsupported("pushforward of a density along this discrete map")
    raise Unsupported(f"pushforward of a density along {type(f).__name__}")


def _affine_inverse_fn(a, c) -> FnExpr:
    from .funcs import Add, Mul, Sub

    x = Id(REAL)
    inv_a = Fraction(1) / Fraction(a) if not isinstance(a, float) else 1.0 / a
    return Mul(Const(REAL, inv_a, REAL), Sub(x, Const(REAL, c, REAL)))


def _affine_image(s: SetExpr, a, c) -> SetExpr:
    from .funcs import _transform_monotone

    return _transform_monotone(s, lambda v: a * v + c, decreasing=a < 0)


def _push_floor(w, b: LebesgueDensity, into_nat: bool) -> MeasureExpr:
    from .sets import NEG_INF, POS_INF, interval

    supp = b.support
    if isinstance(supp, FullSet):
        lo, hi = NEG_INF, POS_INF
    else:
        los = [iv.lo for iv in supp.intervals] + list(supp.atoms_in)
        his = [iv.hi for iv in supp.intervals] + list(supp.atoms_in)
        if not los:
            return ZeroMeasure(NAT if into_nat else REAL)
        lo, hi = min(los), max(his)
    cod = NAT if into_nat else REAL
    if lo == NEG_INF or hi == POS_INF:
        raise Unsupported("floor pushforward of an unbounded density")
    k_lo = math.floor(float(lo))
    k_hi = math.floor(float(hi))
    if into_nat:
        k_lo = max(0, k_lo)
    out = []
    for k in range(k_lo, k_hi + 1):
        window = interval(k, k + 1, True, False)
        m = measure_of(Weighted(w, b), window)
        if not m.value.is_zero:
            out.append(Weighted(m.value, DiracB(k, cod)))
    return sum_measures(out, cod)


def _joint_marginal(w, b: JointDensity, first: bool) -> MeasureExpr:
    rects = [
        (ra, rb) for ra, rb in (b.support.rects if hasattr(b.support, "rects") else [(FullSet(REAL), FullSet(REAL))])
    ]
    out = []
    for ra, rb in rects:
        keep, other = (ra, rb) if first else (rb, ra)
        dens = PartialIntegralFn(b.density, other, over_second=first, tol=DEFAULT_TOL)
        out.append(Weighted(w, LebesgueDensity(keep, dens)))
    return sum_measures(out, REAL)


@dataclass(frozen=True)
class PartialIntegralFn(FnExpr):
    """x |-> integral of a joint density over the other coordinate; the
    numeric marginal of a two-dimensional density."""

    joint: FnExpr  # Prod(Real, Real) -> [0, inf]
    region: SetExpr  # the integrated-out coordinate's region
    over_second: bool
    tol: float

    @property
    def dom(self):
        return REAL

    @property
    def cod(self):
        from .spaces import EXTREAL

        return EXTREAL

    def _eval(self, p):
        fx = partial_left(self.joint, p) if self.over_second else partial_right(self.joint, p)
        from .measures import _quad_region

        r = _quad_region(self.region, lambda y: float(as_weight(eval_fn(fx, y))), self.tol)
        return r.value


def as_scored_det(k: KernelExpr):
    """Recognise k as x |-> w(x) . dirac(f(x)): returns (weight_fn_or_None,
    position_fn) with both terms on k's domain, or None.

    This is the shape every score/return program body takes, and it lets
    sequencing over a continuous prior reduce to score-then-push."""
    if isinstance(k, Det):
        return (None, k.fn)
    if isinstance(k, ScoreK):
        inner = as_scored_det(k.kernel)
        if inner is None:
            return None
        w0, f = inner
        w1 = Compose(k.fn, PairFn(Id(k.dom), f))
        return (w1 if w0 is None else ExtMulFn(w0, w1), f)
    if isinstance(k, PushK):
        inner = as_scored_det(k.kernel)
        if inner is None:
            return None
        w, f = inner
        return (w, Compose(k.fn, f))
    if isinstance(k, PullK):
        inner = as_scored_det(k.kernel)
        if inner is None:
            return None
        w, f = inner
        return (
            None if w is None else Compose(w, k.fn),
            Compose(f, k.fn),
        )
    if isinstance(k, ProdL):
        a = as_scored_det(k.first)
        b = as_scored_det(k.second)
        if a is None or b is None:
            return None
        wa, fa = a
        wb, fb = b
        pair_in = PairFn(Id(k.first.dom), fa)
        pos = PairFn(fa, Compose(fb, pair_in))
        weights = []
        if wa is not None:
            weights.append(wa)
        if wb is not None:
            weights.append(Compose(wb, pair_in))
        w = None
        for part in weights:
            w = part if w is None else ExtMulFn(w, part)
        return (w, pos)
    return None


# -- bind (kernel composition) at the measure level ---------------------------


def bind_measure(mu: MeasureExpr, l: KernelExpr) -> MeasureExpr:
    """integral mu(dy) l(y, -): the composite measure."""
    if l.dom != mu.space:
        raise TypeMismatch("continuation kernel on the wrong space")
    cod = l.cod
    if isinstance(mu, ZeroMeasure) or isinstance(l, ZeroK):
        return ZeroMeasure(cod)
    if isinstance(l, Det):
        return push_measure(mu, l.fn)
    if isinstance(l, ConstK):
        mass = total_mass(mu)
        return scale_measure(mass.value, l.measure)
    if isinstance(mu, FiniteSum):
        return sum_measures([bind_measure(p, l) for p in mu.parts], cod)
    if isinstance(mu, SeqSum):
        bound = sup_mass_bound(l)
        return SeqSum(
            cod,
            lambda n: bind_measure(mu.gen(n), l),
            lambda n: ext_mul(as_ext(mu.tail_bound(n)), bound),
            family=("bound", mu, l),
        )
    w, b = mu.weight, mu.base
    atoms = _atoms_with_space(b)
    if atoms is not None:
        return sum_measures(
            [scale_measure(w, _eval_kernel(l, p)) for p in atoms], cod
        )
    if isinstance(b, CountingNat):
        s = b.set_expr
        excluded = set() if isinstance(s, FullSet) else set(s.members)

        def nth_member(n):
            c = 0
            m = 0
            while True:
                if m not in excluded:
                    if c == n:
                        return m
                    c += 1
                m += 1

        return SeqSum(
            cod,
            lambda n: scale_measure(w, _eval_kernel(l, nth_member(n))),
            lambda n: INF,
            family=("bound-atoms", b, l),
        )
    # continuous middle space: go through the left product and project
    joint = prodl_measure(Weighted(w, b), lift_second(l), None)
    return push_measure(joint, Proj2(Prod(mu.space, cod)))


def lift_second(l: KernelExpr) -> KernelExpr:
    """View l: Y ~> Z as (() x Y) ~> Z shaped for prodl over a dummy unit
    input; implemented by reading prodl_measure's second factor directly."""
    return l


# -- left product at the measure level ---------------------------------------


def prodl_measure(mu: MeasureExpr, l: KernelExpr, x) -> MeasureExpr:
    """The joint measure on Y x Z of mu (on Y) with kernel l whose input is
    (x, y); when x is None l takes y alone (the composition case)."""
    y_space = mu.space

    def l_at(y):
        return _eval_kernel(l, y if x is None else (x, y))

    def l_partial_desc():
        return _second_factor_description(l, x, y_space)

    z_space = l.cod
    space = Prod(y_space, z_space)
    if isinstance(mu, ZeroMeasure):
        return ZeroMeasure(space)
    if isinstance(mu, FiniteSum):
        return sum_measures([prodl_measure(p, l, x) for p in mu.parts], space)
    if isinstance(mu, SeqSum):
        bound = sup_mass_bound(l)
        return SeqSum(
            space,
            lambda n: prodl_measure(mu.gen(n), l, x),
            lambda n: ext_mul(as_ext(mu.tail_bound(n)), bound),
            family=("prodl", mu, l, x),
        )
    w, b = mu.weight, mu.base
    atoms = _atoms_with_space(b)
    if atoms is not None:
        return sum_measures(
            [
                _embed_left(p, y_space, scale_measure(w, l_at(p)))
                for p in atoms
            ],
            space,
        )
    if isinstance(b, CountingNat):
        s = b.set_expr
        excluded = set() if isinstance(s, FullSet) else set(s.members)

        def nth_member(n):
            c = 0
            m = 0
            while True:
                if m not in excluded:
                    if c == n:
                        return m
                    c += 1
                m += 1

        return SeqSum(
            space,
            lambda n: _embed_left(
                nth_member(n), y_space, scale_measure(w, l_at(nth_member(n)))
            ),
            lambda n: INF,
            family=("prodl-atoms", b, l, x),
        )
    if isinstance(b, LebesgueDensity):
        desc = l_partial_desc()
        if desc is None:
            raise Unsupported(
                "left product of a continuous kernel with this second factor"
            )
        out = []
        for piece in desc:
            out.append(piece_to_joint(w, b, piece))
        return sum_measures(out, space)
    raise Unsupported("left product over this base")


@dataclass(frozen=True)
class _SecondPiece:
    """One piece of the second factor as a function of the middle variable
    y: weight_fn (on y), and either a fixed atom, a z-density (on (y, z)),
    or a closed base."""

    weight_fn: object  # FnExpr on Y, or ExtReal
    atom: object = None
    atom_space: SpaceExpr = None
    density: FnExpr = None  # Prod(Y, Real) -> [0, inf]
    density_support: SetExpr = None
    closed: object = None  # BaseMeasure


def _describe_closed(mu: MeasureExpr):
    out = []
    nf = normalize(mu)
    for w, base in nf.pieces:
        out.append(_SecondPiece(weight_fn=w, closed=base))
    if nf.lazy:
        return None
    return out


def _second_factor_description(l: KernelExpr, x, y_space):
    """Describe l(x, y) piecewise in y for structured l; None otherwise."""
    if isinstance(l, ConstK):
        return _describe_closed(l.measure)
    if isinstance(l, PullK) and isinstance(l.fn, Proj1) and x is not None:
        # the lifted-independent shape: the second factor ignores y
        return _describe_closed(_eval_kernel(l.kernel, x))
    if isinstance(l, ParamK):
        out = []
        for piece in l.pieces:
            wfn = piece.weight
            if isinstance(wfn, FnExpr) and x is not None:
                # weight takes (x, y); fix x
                if isinstance(wfn.dom, Prod):
                    wfn = partial_left(wfn, x)
            base = piece.base
            if isinstance(base, PMClosed):
                out.append(_SecondPiece(weight_fn=wfn, closed=base.base))
            elif isinstance(base, PMDirac):
                pos = base.position
                if isinstance(pos, Const):
                    out.append(
                        _SecondPiece(weight_fn=wfn, atom=pos.value, atom_space=pos.cod)
                    )
                else:
                    return None
            elif isinstance(base, PMDensity):
                dens = base.density
                if x is not None and isinstance(dens.dom, Prod) and isinstance(dens.dom.left, Prod):
                    # density on ((X x Y) x Z): fix x via reassociation
                    yz = Prod(y_space, REAL)
                    reassoc = PairFn(
                        PairFn(Const(yz, x, dens.dom.left.left), Proj1(yz)), Proj2(yz)
                    )
                    dens = Compose(dens, reassoc)
                out.append(
                    _SecondPiece(
                        weight_fn=wfn, density=dens, density_support=base.support
                    )
                )
            else:
                return None
        return out
    if isinstance(l, Det) and isinstance(l.fn, Const):
        return [_SecondPiece(weight_fn=ONE, atom=l.fn.value, atom_space=l.fn.cod)]
    return None


def piece_to_joint(w, b: LebesgueDensity, piece: _SecondPiece) -> MeasureExpr:
    """Assemble one joint piece over a continuous first coordinate."""
    y_supp = b.support
    y_dens = b.density
    wfn = piece.weight_fn
    if piece.atom is not None or piece.closed is not None:
        # (density in y) (x) (fixed measure in z), weight possibly y-dependent
        if isinstance(wfn, FnExpr):
            dens_y = wfn if y_dens is None else ExtMulFn(y_dens, wfn)
            weight = w
        else:
            dens_y = y_dens
            weight = ext_mul(w, as_ext(wfn))
            if weight.is_zero:
                return ZeroMeasure(Prod(REAL, piece.atom_space if piece.atom is not None else piece.closed.space))
        left = LebesgueDensity(y_supp, dens_y)
        if piece.atom is not None:
            return Weighted(weight, ProductBase(left, DiracB(piece.atom, piece.atom_space)))
        return Weighted(weight, ProductBase(left, piece.closed))
    # z-density piece: assemble a two-dimensional joint density
    dens2 = piece.density  # on Prod(Y, Real)
    yz = Prod(REAL, REAL)
    factors = [dens2]
    if y_dens is not None:
        factors.append(Compose(y_dens, Proj1(yz)))
    if isinstance(wfn, FnExpr):
        factors.append(Compose(wfn, Proj1(yz)))
        weight = w
    else:
        weight = ext_mul(w, as_ext(wfn))
        if weight.is_zero:
            return ZeroMeasure(yz)
    dens = factors[0]
    for extra in factors[1:]:
        dens = ExtMulFn(dens, extra)
    supp = rectangle(y_supp, piece.density_support)
    return Weighted(weight, JointDensity(supp, dens))


# ---------------------------------------------------------------------------
# classification


_ORDER = [PROBABILITY, SUBPROBABILITY, FINITE, SIGMA_FINITE, S_FINITE]


def _weaken(label, floor_label):
    return _ORDER[max(_ORDER.index(label), _ORDER.index(floor_label))]


def fn_upper_bound(f: FnExpr) -> ExtReal:
    """A sound upper bound for a weight-valued term; INF when unknown."""
    parts = piecewise_constant_parts(f)
    if parts is not None:
        best = ZERO
        for _, v in parts:
            if v > best:
                best = v
        return best
    if isinstance(f, PdfNormal):
        sd = f.sd
        if isinstance(sd, Const):
            s = float(sd.value)
            if s > 0:
                return ExtReal(1.0 / (s * math.sqrt(2 * math.pi)))
        return INF
    if isinstance(f, ExtMulFn):
        return ext_mul(fn_upper_bound(f.left), fn_upper_bound(f.right))
    if isinstance(f, Indicator):
        return ONE
    return INF


def fn_total(f: FnExpr) -> bool:
    """Structurally total: never returns BOTTOM and never raises a domain
    error (conservative)."""
    from .funcs import (
        AbsF,
        Add,
        CaseFn,
        ExpF,
        FloorF,
        InjL,
        InjR,
        Mul,
        NatToReal,
        Neg,
        SafeDiv,
        Sub,
    )

    safe_leaf = (Id, Const, Proj1, Proj2, Indicator, ExtLit)
    if isinstance(f, safe_leaf):
        return True
    if isinstance(f, (InjL, InjR)):
        return True
    if isinstance(f, (Add, Sub, Mul, SafeDiv)):
        return fn_total(f.left) and fn_total(f.right)
    if isinstance(f, (Neg, AbsF, FloorF, NatToReal)):
        return fn_total(f.operand)
    if isinstance(f, PairFn):
        return fn_total(f.first) and fn_total(f.second)
    if isinstance(f, CaseFn):
        return fn_total(f.on_left) and fn_total(f.on_right)
    if isinstance(f, Compose):
        return fn_total(f.outer) and fn_total(f.inner)
    if isinstance(f, IfSet):
        return fn_total(f.then_fn) and fn_total(f.else_fn)
    return False


def sup_mass_bound(k: KernelExpr) -> ExtReal:
    """A sound bound on sup_x k(x, cod); INF when unknown."""
    if isinstance(k, (ZeroK, Det)):
        return ONE
    if isinstance(k, ConstK):
        m = total_mass(k.measure, max_terms=2000)
        return m.value + m.error_bound
    if isinstance(k, ScoreK):
        return ext_mul(sup_mass_bound(k.kernel), fn_upper_bound(k.fn))
    if isinstance(k, SumK):
        total = ZERO
        for p in k.parts:
            total = total + sup_mass_bound(p)
        return total
    if isinstance(k, (ProdL, ProdR)):
        return ext_mul(sup_mass_bound(k.first), sup_mass_bound(k.second))
    if isinstance(k, ComposeK):
        return ext_mul(sup_mass_bound(k.first), sup_mass_bound(k.second))
    if isinstance(k, (PushK, PullK)):
        return sup_mass_bound(k.kernel)
    if isinstance(k, ParamK):
        total = ZERO
        for piece in k.pieces:
            wb = (
                fn_upper_bound(piece.weight)
                if isinstance(piece.weight, FnExpr)
                else as_ext(piece.weight)
            )
            mb = _pm_mass_bound(piece.base)
            total = total + ext_mul(wb, mb)
        return total
    return INF


def _pm_mass_bound(base: PMBase) -> ExtReal:
    if isinstance(base, PMClosed):
        m = measure_of(Weighted(ONE, base.base), FullSet(base.base.space))
        return m.value + m.error_bound
    if isinstance(base, PMDirac):
        return ONE
    if isinstance(base, PMDensity):
        if _pm_density_normalised(base):
            return ONE
        return INF
    if isinstance(base, PMProd):
        return ext_mul(_pm_mass_bound(base.left), _pm_mass_bound(base.right))
    return INF


def _pm_density_normalised(base: PMDensity) -> bool:
    """Recognise x-parameterised densities that are normalised for every x
    (a pdf combinator whose `point` argument is the second projection and
    whose support covers its range)."""
    d = base.density
    if isinstance(d, PdfNormal) and isinstance(d.point, Proj2):
        return isinstance(base.support, FullSet)
    from .funcs import PdfBeta as _PdfBeta

    if isinstance(d, _PdfBeta) and isinstance(d.point, Proj2):
        from .sets import interval as _iv

        open_unit = _iv(0, 1, False, False)
        return intersect(base.support, open_unit) == open_unit
    return False


def classify_kernel(k: KernelExpr) -> str:
    """Best certifiable label in the chain Probability < Subprobability <
    Finite < SigmaFinite < SFinite; SFinite always holds by construction."""
    if isinstance(k, ZeroK):
        return SUBPROBABILITY
    if isinstance(k, Det):
        return PROBABILITY if fn_total(k.fn) else SUBPROBABILITY
    if isinstance(k, ConstK):
        return classify_measure(k.measure)
    if isinstance(k, ParamK):
        b = sup_mass_bound(k)
        if b == ONE and len(k.pieces) == 1 and not isinstance(k.pieces[0].weight, FnExpr):
            piece = k.pieces[0]
            if as_ext(piece.weight) == ONE and (
                isinstance(piece.base, PMDirac)
                and fn_total(piece.base.position)
                or isinstance(piece.base, PMDensity)
                and _pm_density_normalised(piece.base)
            ):
                return PROBABILITY
        if b <= ONE:
            return SUBPROBABILITY
        if not b.is_inf:
            return FINITE
        return S_FINITE
    if isinstance(k, ComposeK):
        a = classify_kernel(k.first)
        b = classify_kernel(k.second)
        if a == b == PROBABILITY:
            return PROBABILITY
        if _ORDER.index(a) <= 1 and _ORDER.index(b) <= 1:
            return SUBPROBABILITY
        if _ORDER.index(a) <= 2 and _ORDER.index(b) <= 2:
            return FINITE
        return S_FINITE
    if isinstance(k, PushK):
        inner = classify_kernel(k.kernel)
        if inner == PROBABILITY:
            return PROBABILITY if fn_total(k.fn) else SUBPROBABILITY
        if inner in (SUBPROBABILITY, FINITE):
            return inner
        return S_FINITE  # pushforward of a sigma-finite kernel is s-finite
    if isinstance(k, PullK):
        return classify_kernel(k.kernel)
    if isinstance(k, ScoreK):
        inner = classify_kernel(k.kernel)
        bound = fn_upper_bound(k.fn)
        if not bound.is_inf and _ORDER.index(inner) <= 2:
            if bound <= ONE and inner in (PROBABILITY, SUBPROBABILITY):
                return SUBPROBABILITY
            return FINITE
        if _ORDER.index(inner) <= 3 and _fn_finite_valued(k.fn):
            return SIGMA_FINITE
        return S_FINITE
    if isinstance(k, SumK):
        bound = ZERO
        for p in k.parts:
            bound = bound + sup_mass_bound(p)
        if bound <= ONE:
            return SUBPROBABILITY
        if not bound.is_inf:
            return FINITE
        if _pairwise_singular(k.parts) and all(
            _ORDER.index(classify_kernel(p)) <= 3 for p in k.parts
        ):
            return SIGMA_FINITE
        return S_FINITE
    if isinstance(k, SeqSumK):
        if k.family and k.family[0] == "windows":
            return SIGMA_FINITE
        tb = as_ext(k.tail_bound(0))
        if tb <= ONE:
            return SUBPROBABILITY
        if not tb.is_inf:
            return FINITE
        return S_FINITE
    if isinstance(k, (ProdL, ProdR)):
        a = classify_kernel(k.first)
        b = classify_kernel(k.second)
        if a == b == PROBABILITY:
            return PROBABILITY
        if _ORDER.index(a) <= 1 and _ORDER.index(b) <= 1:
            return SUBPROBABILITY
        if _ORDER.index(a) <= 2 and _ORDER.index(b) <= 2:
            return FINITE
        return S_FINITE
    raise TypeMismatch(f"not a kernel expression: {k!r}")


def _fn_finite_valued(f: FnExpr) -> bool:
    """True when the term provably never takes the value inf."""
    parts = piecewise_constant_parts(f)
    if parts is not None:
        return all(not v.is_inf for _, v in parts)
    if isinstance(f, (PdfNormal,)):
        return True
    from .funcs import PdfBeta as _B, PdfPoisson as _P

    if isinstance(f, (_B, _P)):
        return True
    if isinstance(f, ExtMulFn):
        return _fn_finite_valued(f.left) and _fn_finite_valued(f.right)
    if f.cod == REAL:
        return True
    return False


def _pairwise_singular(parts) -> bool:
    for a, b in itertools.combinations(parts, 2):
        if mutually_singular(a, b) is None:
            return False
    return True


# ---------------------------------------------------------------------------
# support, singularity, absolute continuity


def as_const_measure(k: KernelExpr):
    """The measure of an input-independent kernel, or None."""
    if isinstance(k, ConstK):
        return k.measure
    if isinstance(k, ZeroK):
        return ZeroMeasure(k.cod)
    if isinstance(k, Det) and isinstance(k.fn, Const):
        return dirac(k.fn.value, k.cod)
    if isinstance(k, SumK):
        parts = [as_const_measure(p) for p in k.parts]
        if any(p is None for p in parts):
            return None
        return sum_measures(parts, k.cod)
    if isinstance(k, ScoreK):
        inner = as_const_measure(k.kernel)
        if inner is None:
            return None
        # the score may still mention the (irrelevant) input coordinate
        try:
            g = partial_left(k.fn, _witness_point(k.dom))
        except Unsupported:
            return None
        return score_measure(inner, g)
    if isinstance(k, PushK):
        inner = as_const_measure(k.kernel)
        if inner is None:
            return None
        return push_measure(inner, k.fn)
    if isinstance(k, SeqSumK):
        def gen(n):
            m = as_const_measure(k.gen(n))
            if m is None:
                raise Unsupported("non-constant piece in a lazy kernel sum")
            return m

        try:
            gen(0)
        except Unsupported:
            return None
        return SeqSum(k.cod, gen, k.tail_bound, family=k.family)
    return None


def _witness_point(space: SpaceExpr):
    from .spaces import enumerate_points

    if isinstance(space, Unit):
        return ()
    if isinstance(space, Fin):
        return space.labels[0]
    if isinstance(space, Nat):
        return 0
    if isinstance(space, Real):
        return 0
    if isinstance(space, Prod):
        return (_witness_point(space.left), _witness_point(space.right))
    from .spaces import Inl

    if hasattr(space, "left"):
        return Inl(_witness_point(space.left))
    raise Unsupported(f"no witness point for {space!r}")


@dataclass(frozen=True)
class SupportDescriptor:
    """A product-space carrier: k is supported in rect(Full, carrier) with
    per-x sections equal to `carrier` (constant kernels), or in the union
    of rectangles when given explicitly."""

    carrier: SetExpr  # on the codomain

    def section_at(self, x) -> SetExpr:
        return self.carrier

    def product_set(self, dom: SpaceExpr) -> SetExpr:
        return rectangle(FullSet(dom), self.carrier)


def kernel_support(k: KernelExpr) -> SupportDescriptor:
    mu = as_const_measure(k)
    if mu is not None:
        try:
            return SupportDescriptor(support_set(mu))
        except Unsupported:
            return SupportDescriptor(FullSet(k.cod))
    if isinstance(k, ParamK):
        parts = []
        for piece in k.pieces:
            base = piece.base
            if isinstance(base, PMClosed):
                parts.append(base_support(base.base))
            elif isinstance(base, PMDirac) and isinstance(base.position, Const):
                parts.append(singleton_set(base.position.value, base.position.cod))
            elif isinstance(base, PMDensity):
                parts.append(base.support)
            else:
                return SupportDescriptor(FullSet(k.cod))
        return SupportDescriptor(union_all(parts, k.cod))
    return SupportDescriptor(FullSet(k.cod))


def mutually_singular(k: KernelExpr, l: KernelExpr):
    """A witness set A (on dom x cod) with k supported in A and l outside
    it, or None if no witness was found (not a proof of non-singularity)."""
    if k.dom != l.dom or k.cod != l.cod:
        raise TypeMismatch("mutual singularity needs kernels of the same type")
    if isinstance(l, ZeroK):
        return FullSet(Prod(k.dom, k.cod))
    if isinstance(k, ZeroK):
        return EmptySet(Prod(k.dom, k.cod))
    sk = kernel_support(k)
    sl = kernel_support(l)
    if isinstance(sk.carrier, FullSet) or isinstance(sl.carrier, FullSet):
        return None
    overlap = intersect(sk.carrier, sl.carrier)
    if is_empty_set(overlap):
        return sk.product_set(k.dom)
    # a Lebesgue-null overlap that carries no atom of either side still
    # separates the kernels
    if _overlap_null_for(k, overlap) and _overlap_null_for(l, overlap):
        witness = difference(sk.carrier, overlap)
        return rectangle(FullSet(k.dom), witness)
    return None


def _overlap_null_for(k: KernelExpr, overlap: SetExpr) -> bool:
    mu = as_const_measure(k)
    if mu is None:
        return False
    try:
        r = measure_of(mu, overlap)
    except Unsupported:
        return False
    return r.mode == "exact" and r.value.is_zero


PLAIN = "Plain"
ZERO_INFTY = "ZeroInfty"


def abs_continuous(k: KernelExpr, l: KernelExpr, mode=PLAIN) -> bool:
    """Decide k << l (Plain) or k <<_inf l (ZeroInfty) on the structured
    fragment; Unsupported otherwise."""
    if k.dom != l.dom or k.cod != l.cod:
        raise TypeMismatch("absolute continuity needs kernels of the same type")
    if k == l:
        return True
    if isinstance(k, ScoreK) and k.kernel == l:
        return True  # a scored kernel has a density w.r.t. its base
    mk = as_const_measure(k)
    ml = as_const_measure(l)
    if mk is None or ml is None:
        raise Unsupported("absolute continuity outside the constant fragment")
    return measure_abs_continuous(mk, ml, mode)


def measure_abs_continuous(mu: MeasureExpr, nu: MeasureExpr, mode=PLAIN) -> bool:
    if isinstance(mu, ZeroMeasure):
        return True
    nf_mu = normalize(mu)
    nf_nu = normalize(nu)
    # atoms of mu must be charged by nu
    for w, b in nf_mu.pieces:
        from .measures import base_atoms

        atoms = base_atoms(b)
        if atoms is None:
            # infinitely many atoms: compare supports setwise (pmf families
            # charge their declared support everywhere)
            uncovered = difference(b.set_expr, _atomic_charged_set(nf_nu, nu.space))
            if not is_empty_set(uncovered):
                return False
            continue
        for p in atoms:
            if _measure_charges_point(nf_nu, p, nu.space) is False:
                return False
    # continuous support of mu must be covered by nu's continuous support
    mu_cont = _continuous_support(nf_mu)
    nu_cont = _continuous_support(nf_nu)
    if mu_cont is not None and not is_empty_set(mu_cont):
        if nu_cont is None:
            return False
        extra = difference(mu_cont, nu_cont)
        if not _lebesgue_null(extra):
            return False
    # lazy pmf families of mu
    for lz in nf_mu.lazy:
        fam = lz.family
        if fam and fam[0] == "nat-pmf":
            supp = fam[2]
            uncovered = difference(supp, _atomic_charged_set(nf_nu, nu.space))
            if not is_empty_set(uncovered):
                return False
        else:
            raise Unsupported("absolute continuity with window families")
    if mode == PLAIN:
        return True
    # 0-inf mode: mu must put no finite-positive mass on nu's 0-inf
    # region, i.e. mu(top(nu) minus top(mu)) = 0
    t_nu = top_zero_infty_set(nu)
    t_mu = top_zero_infty_set(mu)
    gap = difference(t_nu, t_mu)
    r = measure_of(mu, gap)
    return r.value.is_zero


def _measure_charges_point(nf, p, space) -> bool:
    from .measures import base_charges_point

    for w, b in nf.pieces:
        if not w.is_zero and base_charges_point(b, p):
            return True
    for lz in nf.lazy:
        fam = lz.family
        if fam and fam[0] == "nat-pmf":
            pmf, supp = fam[1], fam[2]
            if member(supp, p):
                val = as_weight(eval_fn(pmf, p)) if isinstance(pmf, FnExpr) else ONE
                if not val.is_zero:
                    return True
    return False


def _continuous_support(nf):
    """Union of density supports (on the reals); None when no density part
    exists; Unsupported on spaces where it is not meaningful."""
    parts = []
    for w, b in nf.pieces:
        parts.extend(_base_continuous_support(b))
    if not parts:
        return None
    return union_all(parts)


def _base_continuous_support(b):
    if isinstance(b, LebesgueDensity):
        return [base_support(b)]
    if isinstance(b, (DiracB, CountingFin, CountingNat)):
        return []
    if isinstance(b, (ProductBase, JointDensity)):
        raise Unsupported("absolute continuity over product densities")
    return []


def _atomic_charged_set(nf, space) -> SetExpr:
    parts = []
    for w, b in nf.pieces:
        if w.is_zero:
            continue
        if isinstance(b, (DiracB, CountingFin, CountingNat)):
            parts.append(base_support(b))
    for lz in nf.lazy:
        fam = lz.family
        if fam and fam[0] == "nat-pmf":
            parts.append(fam[2])
    return union_all(parts, space)


def _lebesgue_null(s: SetExpr) -> bool:
    if is_empty_set(s):
        return True
    try:
        return lebesgue_length(s).is_zero
    except TypeMismatch:
        return False


# ---------------------------------------------------------------------------
# factorisation and sigma-finite presentation


def factorize_one_infty(k: KernelExpr):
    """Write k = score(m, f) with m sigma-finite and f valued in {1, inf};
    f's infinity region is a top 0-inf set descriptor for k."""
    dom, cod = k.dom, k.cod
    pair_space = Prod(dom, cod)
    label = classify_kernel(k)
    if _ORDER.index(label) <= 3:
        return k, ExtLit(pair_space, ONE)
    mu = as_const_measure(k)
    if mu is None:
        raise Unsupported("factorisation outside the constant fragment")
    top = top_zero_infty_set(mu)
    if is_empty_set(top):
        return k, ExtLit(pair_space, ONE)
    f = IfSet(
        rectangle(FullSet(dom), top),
        ExtLit(pair_space, INF),
        ExtLit(pair_space, ONE),
    )
    nf = normalize(mu)
    parts = []
    for w, b in nf.infinite_pieces:
        parts.append(Weighted(ONE, b))
    rest = difference(FullSet(cod), top)
    for w, b in nf.finite_pieces:
        restricted = restrict_measure(Weighted(w, b), rest)
        if not isinstance(restricted, ZeroMeasure):
            parts.append(restricted)
    for lz in nf.lazy:
        parts.append(
            SeqSum(lz.space, lambda n, lz=lz: restrict_measure(lz.gen(n), rest),
                   lz.tail_bound, family=lz.family)
        )
    base = sum_measures(parts, cod)
    return ConstK(dom, base), f


def as_finite_kernel_sum(k: KernelExpr):
    """Lazily split k into kernels of uniformly bounded (<= 1) mass."""
    mu = as_const_measure(k)
    if mu is not None:
        for piece in as_subprob_sum(mu):
            yield ConstK(k.dom, piece)
        return
    if isinstance(k, Det):
        yield k
        return
    if isinstance(k, SumK):
        gens = [as_finite_kernel_sum(p) for p in k.parts]
        from .measures import _interleave

        yield from _interleave(gens)
        return
    if isinstance(k, ParamK):
        bound = sup_mass_bound(k)
        if bound <= ONE:
            yield k
            return
        if not bound.is_inf:
            n = math.ceil(float(bound))
            for piece in k.pieces:
                w = piece.weight
                if isinstance(w, FnExpr):
                    split = ExtMulFn(w, ExtLit(w.dom, Fraction(1, n)))
                else:
                    split = ext_mul(as_ext(w), Fraction(1, n))
                for _ in range(n):
                    yield ParamK(k.dom, (PMPiece(split, piece.base),))
            return
    raise Unsupported("cannot split this kernel into finite pieces")


def table_kernel(dom: SpaceExpr, cod: SpaceExpr, rows: dict) -> KernelExpr:
    """An exact finite kernel from a table {x: {y: weight}}: one
    parameterised piece per target atom, gated by case splits on x."""
    targets = sorted({y for row in rows.values() for y in row}, key=repr)
    if not targets:
        from .spaces import enumerate_points

        targets = [enumerate_points(cod)[0]]
    pieces = []
    for y in targets:
        fn = ExtLit(dom, ZERO)
        for x, row in sorted(rows.items(), key=lambda kv: repr(kv[0])):
            w = as_ext(row.get(y, ZERO))
            if w.is_zero:
                continue
            fn = IfSet(singleton_set(x, dom), ExtLit(dom, w), fn)
        pieces.append(PMPiece(fn, PMClosed(DiracB(y, cod))))
    return ParamK(dom, tuple(pieces))


def dense_to_kernel(dk) -> KernelExpr:
    """Lift an oracle table to a kernel expression."""
    rows = {x: dict(dk.rows[x].weights) for x in dk.rows}
    return table_kernel(dk.dom, dk.cod, rows)


def kernel_to_dense(k: KernelExpr, dom=None, cod=None):
    """Evaluate a kernel exhaustively on finite spaces."""
    from .oracle import DenseKernel, DenseMeasure
    from .spaces import enumerate_points

    dom = dom or k.dom
    cod = cod or k.cod
    rows = {}
    for x in enumerate_points(dom):
        mu = eval_kernel(k, x)
        weights = {}
        for y in enumerate_points(cod):
            weights[y] = measure_of(mu, singleton_set(y, cod)).value
        rows[x] = DenseMeasure(cod, weights)
    return DenseKernel(dom, cod, rows)


def sigma_finite_presentation(k: KernelExpr):
    """A sigma-finite kernel into Nat x cod whose second-projection
    pushforward re-denotes k, with pieces on disjoint {i} x cod slices."""
    cod = k.cod
    target = Prod(NAT, cod)
    pieces = as_finite_kernel_sum(k)
    cache = []
    src = iter(pieces)

    def piece(i):
        while len(cache) <= i:
            try:
                cache.append(next(src))
            except StopIteration:
                cache.append(None)
        return cache[i]

    def gen(i):
        p = piece(i)
        if p is None:
            return ZeroK(k.dom, target)
        tag = PairFn(Const(cod, i, NAT), Id(cod))
        return PushK(p, tag)

    def tail(i):
        return ZERO if piece(i) is None else INF

    presented = SeqSumK(k.dom, target, gen, tail, family=("windows", k))
    projection = Proj2(target)
    return presented, projection

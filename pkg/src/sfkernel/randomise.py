"""Randomisation: compile representable kernels into deterministic
partial functions of a single uniform randomness source.

A probability kernel into a discrete target becomes a right-continuous
generalized inverse CDF (min{t : CDF(t) >= r}) built as an exact nested
case split; a real target with a density uses monotone bisection against
a quadrature CDF.  Subprobability kernels park their missing mass in an
undefined region of the source.  General s-finite kernels spread their
unit pieces over the slices of counting_N (x) uniform[0,1), and explicit
measure isomorphisms repackage that source as the half-line or the whole
real line.

The atom order behind discrete inverse CDFs is fixed and documented:
finite labels in declaration order, naturals ascending, real atoms
ascending.
"""

from __future__ import annotations

import bisect as _bisect
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    FiniteTotalMass,
    NotProbability,
    NotSubprobability,
    TypeMismatch,
    Unsupported,
)
from .extreal import INF, ONE, ZERO, ExtReal, as_ext, ext_div, ext_mul
from . import quadrature
from .funcs import (
    Add,
    Compose,
    Const,
    FloorF,
    FnExpr,
    Id,
    IfSet,
    Mul,
    NatOfFloor,
    PairFn,
    Proj1,
    Proj2,
    RestrictTo,
    Sub,
    as_weight,
    eval_fn,
    preimage,
)
from .kernels import ConstK, Det, KernelExpr, PushK, classify_kernel, eval_kernel
from .measures import (
    CountingNat,
    DiracB,
    LebesgueDensity,
    MeasureExpr,
    ProductBase,
    Weighted,
    ZeroMeasure,
    as_subprob_sum,
    lebesgue,
    lebesgue_on,
    measure_of,
    normalize,
    piecewise_constant_parts,
    singleton_set,
    total_mass,
)
from .sets import (
    EmptySet,
    FullSet,
    Interval,
    NEG_INF,
    POS_INF,
    SetExpr,
    interval,
    lebesgue_length,
    member,
    real_set,
    union_all,
)
from .spaces import (
    BOTTOM,
    EXTREAL,
    Fin,
    NAT,
    Nat,
    Prod,
    REAL,
    Real,
    SpaceExpr,
    UNIT,
    Unit,
    check_point,
)

UNIT01 = "Unit01"
NATUNIT = "NatUnit"
HALFLINE = "HalfLine"
REALLINE = "RealLine"

DEFAULT_TOL = 1e-9
MAX_BISECT = 200


@dataclass(frozen=True)
class Randomiser:
    """det pushes the declared source through to the target: for every
    input s, det(s, -)_*(source measure) re-denotes the kernel at s."""

    source: str
    det: FnExpr  # Prod(input_space, Real) -> target (partial)
    tol: float
    input_space: SpaceExpr
    target_space: SpaceExpr


def source_measure(r: Randomiser) -> MeasureExpr:
    if r.source == UNIT01:
        return lebesgue(0, 1, True, False)
    if r.source == NATUNIT:
        return Weighted(
            ONE,
            ProductBase(
                CountingNat(FullSet(NAT)),
                LebesgueDensity(interval(0, 1, True, False)),
            ),
        )
    if r.source == HALFLINE:
        return lebesgue_on(interval(0, POS_INF, True, False))
    return lebesgue()


# ---------------------------------------------------------------------------
# atom ordering


def atom_sort_key(space: SpaceExpr):
    if isinstance(space, Fin):
        order = {label: i for i, label in enumerate(space.labels)}
        return lambda p: order[p]
    if isinstance(space, (Nat, Real)):
        return lambda p: p
    return lambda p: repr(p)


def _undefined_fn(dom: SpaceExpr, cod: SpaceExpr) -> FnExpr:
    from .kernels import _witness_point

    return Compose(RestrictTo(EmptySet(cod)), Const(dom, _witness_point(cod), cod))


# ---------------------------------------------------------------------------
# inverse-CDF function terms


@dataclass(frozen=True, eq=False)
class InvCdfReal(FnExpr):
    """Monotone bisection against the quadrature CDF of a density; the
    generalized inverse min{t : CDF(t) >= r}.  Plateaus resolve to their
    left edge.  A cumulative grid is cached internally (pure)."""

    support: SetExpr
    density: object  # FnExpr Real -> [0, inf], or None (Lebesgue)
    tol: float
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dom(self):
        return REAL

    @property
    def cod(self):
        return REAL

    def _dens_at(self, x):
        if self.density is None:
            return 1.0
        return float(as_weight(eval_fn(self.density, x)))

    def _grid(self):
        if "nodes" in self._cache:
            return self._cache["nodes"], self._cache["cums"]
        ivs = []
        if isinstance(self.support, FullSet):
            spans = [(NEG_INF, POS_INF)]
        else:
            spans = [(iv.lo, iv.hi) for iv in self.support.intervals]
        for lo, hi in spans:
            lo, hi = self._clip(lo, hi)
            ivs.append((float(lo), float(hi)))
        nodes = []
        cums = []
        acc = 0.0
        cells_per_unit = 256
        for lo, hi in ivs:
            width = hi - lo
            n = max(16, min(4096, int(width * cells_per_unit)))
            step = width / n
            t = lo
            for i in range(n):
                t2 = lo + (i + 1) * step
                v, _ = quadrature.simpson_finite(self._dens_at, t, t2, self.tol / n)
                acc += v
                nodes.append((t, t2))
                cums.append(acc)
                t = t2
        self._cache["nodes"] = nodes
        self._cache["cums"] = cums
        return nodes, cums

    def _clip(self, lo, hi):
        # bound infinite tails where the density mass becomes negligible
        budget = self.tol / 8
        if lo == NEG_INF:
            b = 16.0
            anchor = hi if hi != POS_INF else 0.0
            while True:
                v, _ = quadrature.integrate_interval(
                    self._dens_at, float(anchor) - 2 * b, float(anchor) - b, self.tol
                )
                if v < budget or b > 1e12:
                    lo = float(anchor) - 2 * b
                    break
                b *= 2
        if hi == POS_INF:
            b = 16.0
            anchor = lo if lo != NEG_INF else 0.0
            while True:
                v, _ = quadrature.integrate_interval(
                    self._dens_at, float(anchor) + b, float(anchor) + 2 * b, self.tol
                )
                if v < budget or b > 1e12:
                    hi = float(anchor) + 2 * b
                    break
                b *= 2
        return lo, hi

    def cdf(self, t) -> float:
        """Unnormalised CDF of the density up to t (quadrature)."""
        total = 0.0
        spans = (
            [(NEG_INF, POS_INF)]
            if isinstance(self.support, FullSet)
            else [(iv.lo, iv.hi) for iv in self.support.intervals]
        )
        for lo, hi in spans:
            if t <= lo:
                continue
            hi = min(float(hi), float(t)) if hi != POS_INF else float(t)
            v, _ = quadrature.integrate_interval(self._dens_at, lo, hi, self.tol)
            total += v
        return total

    def _eval(self, r):
        r = float(r)
        if not 0.0 <= r < 1.0 + self.tol:
            return BOTTOM
        nodes, cums = self._grid()
        if not nodes:
            return BOTTOM
        i = _bisect.bisect_left(cums, r)
        if i >= len(nodes):
            return nodes[-1][1]
        lo, hi = nodes[i]
        base = cums[i - 1] if i > 0 else 0.0
        flo = base
        iters = 0
        while hi - lo > self.tol and iters < MAX_BISECT:
            mid = 0.5 * (lo + hi)
            v, _ = quadrature.simpson_finite(self._dens_at, lo, mid, self.tol / 4)
            if flo + v >= r:
                hi = mid
            else:
                lo = mid
                flo += v
            iters += 1
        return hi

    def _preimage(self, s):
        # the map is monotone nondecreasing on its domain [0, 1), so
        # interval preimages are CDF values (numeric-path accuracy)
        domain = interval(0, 1, True, False)
        if isinstance(s, FullSet):
            return domain
        if isinstance(s, EmptySet):
            return EmptySet(REAL)
        pieces = []
        for iv in s.intervals:
            lo = 0.0 if iv.lo == NEG_INF else self.cdf(iv.lo)
            hi = 1.0 if iv.hi == POS_INF else self.cdf(iv.hi)
            if hi > lo:
                pieces.append(Interval(lo, hi, True, False))
        from .sets import intersect, real_set as _real_set

        return intersect(_real_set(pieces), domain)


@dataclass(frozen=True, eq=False)
class InvCdfNat(FnExpr):
    """Generalized inverse CDF onto the naturals from a pmf term."""

    pmf: FnExpr  # Nat -> [0, inf]
    support: SetExpr

    @property
    def dom(self):
        return REAL

    @property
    def cod(self):
        return NAT

    def _eval(self, r):
        r = float(r)
        if not 0.0 <= r < 1.0:
            return BOTTOM
        excluded = set()
        if not isinstance(self.support, FullSet):
            if self.support.cofinite:
                excluded = set(self.support.members)
            else:
                members = sorted(self.support.members)
                acc = 0.0
                for n in members:
                    acc += float(as_weight(eval_fn(self.pmf, n)))
                    if acc >= r:
                        return n
                return members[-1] if members else BOTTOM
        acc = 0.0
        for n in itertools.count():
            if n in excluded:
                continue
            acc += float(as_weight(eval_fn(self.pmf, n)))
            if acc >= r:
                return n
            if n > 10**6:
                raise Unsupported("inverse pmf scan did not terminate")

    def atom_length(self, n) -> ExtReal:
        """Exact-to-quadrature source length of det^{-1}(n)."""
        if not member(self.support, n):
            return ZERO
        return as_weight(eval_fn(self.pmf, n))


@dataclass(frozen=True, eq=False)
class NatIndexed(FnExpr):
    """Piece-indexed function on Nat x Real: a finite case prefix plus an
    optional repeating cycle (the shape of infinite-weight kernels)."""

    cases: tuple  # of FnExpr Real -> target
    cycle: tuple  # of FnExpr, possibly empty
    target: SpaceExpr

    @property
    def dom(self):
        return Prod(NAT, REAL)

    @property
    def cod(self):
        return self.target

    def _case(self, n):
        if n < len(self.cases):
            return self.cases[n]
        if self.cycle:
            return self.cycle[(n - len(self.cases)) % len(self.cycle)]
        return None

    def _eval(self, p):
        n, r = p
        fn = self._case(n)
        if fn is None:
            return BOTTOM
        return fn._eval(r)

    def atom_length(self, t) -> ExtReal:
        """Exact counting (x) Lebesgue source length of det^{-1}(t)."""
        total = ZERO
        for fn in self.cases:
            total = total + _slice_atom_length(fn, t, self.target)
        if self.cycle:
            per_cycle = ZERO
            for fn in self.cycle:
                per_cycle = per_cycle + _slice_atom_length(fn, t, self.target)
            if not per_cycle.is_zero:
                return INF
        return total


def _slice_atom_length(det_slice: FnExpr, t, target) -> ExtReal:
    pre = preimage(det_slice, singleton_set(t, target))
    return lebesgue_length(
        pre if not isinstance(pre, FullSet) else interval(0, 1, True, False)
    )


@dataclass(frozen=True, eq=False)
class LazyIndexed(FnExpr):
    """A half-line function assembled from per-unit-slice pieces produced
    by a pure generator (used by total randomisation)."""

    case_at: object  # n -> FnExpr Real[0,1) -> target
    target: SpaceExpr
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dom(self):
        return REAL

    @property
    def cod(self):
        return self.target

    def _case(self, n):
        if n not in self._cache:
            self._cache[n] = self.case_at(n)
        return self._cache[n]

    def _eval(self, h):
        if h < 0:
            return BOTTOM
        n = math.floor(h)
        fn = self._case(n)
        if fn is None:
            return BOTTOM
        return fn._eval(h - n)


# ---------------------------------------------------------------------------
# probability / subprobability randomisation


def _as_measure(sigma):
    if isinstance(sigma, MeasureExpr):
        return sigma, UNIT
    if isinstance(sigma, KernelExpr):
        from .kernels import as_const_measure

        mu = as_const_measure(sigma)
        if mu is None:
            raise Unsupported(
                "randomisation of input-dependent kernels: close over the "
                "input first (sampling does this per draw)"
            )
        return mu, sigma.dom
    raise TypeMismatch(f"not a kernel or measure: {sigma!r}")


def _discrete_atoms(mu: MeasureExpr):
    """[(point, mass)] in the documented order, or None if not atomic."""
    nf = normalize(mu)
    if nf.lazy:
        return None
    space = mu.space
    weights = {}
    for w, b in nf.pieces:
        from .measures import base_atoms

        atoms = base_atoms(b)
        if atoms is None or (not atoms and not isinstance(b, (DiracB,))):
            if isinstance(b, LebesgueDensity):
                return None
            if atoms is None:
                return None
        for p in atoms:
            weights[p] = weights.get(p, ZERO) + w
    key = atom_sort_key(space)
    return sorted(weights.items(), key=lambda kv: key(kv[0]))


def _inverse_cdf_fn(mu: MeasureExpr, tol: float):
    """The single-argument inverse CDF on [0, 1) for a measure of mass at
    most one; undefined above the total mass."""
    space = mu.space
    atoms = _discrete_atoms(mu)
    if atoms is not None:
        det = _undefined_fn(REAL, space)
        cum = Fraction(0)
        boundaries = []
        for p, w in atoms:
            if w.is_zero:
                continue
            if w.is_inf:
                raise NotSubprobability("an atom carries infinite mass")
            lo = cum
            cum = cum + (w.v if isinstance(w.v, Fraction) else Fraction(float(w)))
            boundaries.append((lo, cum, p))
        for lo, hi, p in reversed(boundaries):
            det = IfSet(
                interval(lo, hi, True, False), Const(REAL, p, space), det
            )
        return det, cum
    if isinstance(space, Real):
        nf = normalize(mu)
        if nf.lazy or not nf.pieces:
            raise Unsupported("inverse CDF needs density or atom pieces")
        if len(nf.pieces) == 1 and not any(
            not isinstance(b, LebesgueDensity) for _, b in nf.pieces
        ):
            w, b = nf.pieces[0]
            if w.is_inf:
                raise NotSubprobability("infinite density mass")
            dens = b.density
            if w != ONE:
                from .funcs import ExtMulFn, ExtLit

                dens = (
                    ExtLit(REAL, w)
                    if dens is None
                    else ExtMulFn(ExtLit(REAL, w), dens)
                )
            inv = InvCdfReal(b.support, dens, tol)
            m = total_mass(mu, tol=tol)
            mass = m.value
            if mass > ONE:
                mass = ONE if float(mass) <= 1 + 4 * tol else mass
            frac_mass = (
                mass.v if isinstance(mass.v, Fraction) else Fraction(min(1.0, float(mass)))
            )
            return inv, frac_mass
        raise Unsupported("inverse CDF for mixed or multi-piece real measures")
    if isinstance(space, Nat):
        nf = normalize(mu)
        for lz in nf.lazy:
            fam = lz.family
            if fam and fam[0] == "nat-pmf":
                inv = InvCdfNat(fam[1], fam[2])
                return inv, Fraction(1)
        raise Unsupported("inverse CDF for this measure on the naturals")
    raise Unsupported(f"inverse CDF onto {space!r}")


def _lift_det(det_r: FnExpr, input_space: SpaceExpr) -> FnExpr:
    return Compose(det_r, Proj2(Prod(input_space, REAL)))


def randomise_prob(sigma, tol=DEFAULT_TOL) -> Randomiser:
    """A Unit01 randomiser for a probability kernel into a discrete or
    real-with-density target."""
    mu, input_space = _as_measure(sigma)
    label = classify_kernel(ConstK(UNIT, mu)) if isinstance(sigma, MeasureExpr) else classify_kernel(sigma)
    if label != "Probability":
        raise NotProbability(f"classification gives {label}")
    det_r, mass = _inverse_cdf_fn(mu, tol)
    return Randomiser(UNIT01, _lift_det(det_r, input_space), tol, input_space, mu.space)


def randomise_subprob(sigma, tol=DEFAULT_TOL) -> Randomiser:
    """A Unit01 randomiser with an undefined region of length 1 - mass."""
    mu, input_space = _as_measure(sigma)
    label = classify_kernel(ConstK(UNIT, mu)) if isinstance(sigma, MeasureExpr) else classify_kernel(sigma)
    if label not in ("Probability", "Subprobability"):
        raise NotSubprobability(f"classification gives {label}")
    target = mu.space
    if isinstance(mu, ZeroMeasure):
        det_r = _undefined_fn(REAL, target)
        return Randomiser(UNIT01, _lift_det(det_r, input_space), tol, input_space, target)
    det_r, mass = _inverse_cdf_fn(mu, tol)
    if mass < 1:
        det_r = IfSet(interval(0, mass, True, False), det_r, _undefined_fn(REAL, target))
    return Randomiser(UNIT01, _lift_det(det_r, input_space), tol, input_space, target)


# ---------------------------------------------------------------------------
# s-finite randomisation


def _subprob_piece_dets(mu: MeasureExpr, tol):
    """Dets for the unit pieces of mu: (finite prefix, repeating cycle)."""
    nf = normalize(mu)
    finite_parts = []
    cycle_parts = []
    for w, b in nf.pieces:
        piece = Weighted(w, b)
        if w.is_inf:
            unit_splits = list(as_subprob_sum(Weighted(ONE, b), tol))
            if len(unit_splits) == 0:
                continue
            cycle_parts.extend(unit_splits)
        else:
            finite_parts.append(piece)
    for lz in nf.lazy:
        fam = lz.family
        if fam and fam[0] == "nat-pmf" and len(fam) > 3 and fam[3]:
            finite_parts.append(lz)
        else:
            raise Unsupported("randomisation of this lazy family")

    def det_of(piece):
        mass = total_mass(piece, tol=tol)
        if mass.value.is_inf:
            raise Unsupported("a unit piece still has infinite mass")
        det_r, m = _inverse_cdf_fn(piece, tol)
        if m < 1:
            det_r = IfSet(
                interval(0, m, True, False), det_r, _undefined_fn(REAL, mu.space)
            )
        return det_r

    prefix = []
    for piece in finite_parts:
        for unit in as_subprob_sum(piece, tol):
            prefix.append(det_of(unit))
    cycle = [det_of(p) for p in cycle_parts]
    return prefix, cycle


def _lebesgue_slices_det(mu: MeasureExpr):
    """The closed-form slice map for plain Lebesgue measure: slice n is
    the unit window starting at W(n), interleaving the two directions."""
    nf = normalize(mu)
    if len(nf.pieces) != 1 or nf.lazy:
        return None
    w, b = nf.pieces[0]
    if not (w == ONE and isinstance(b, LebesgueDensity) and b.density is None):
        return None
    if not isinstance(b.support, FullSet):
        return None
    nr = Prod(NAT, REAL)
    from .funcs import NatToReal, SafeDiv

    n_real = NatToReal(Proj1(nr))
    r = Proj2(nr)
    half = Mul(Const(nr, Fraction(1, 2), REAL), n_real)
    parity = Sub(n_real, Mul(Const(nr, 2, REAL), FloorF(half)))
    even_start = FloorF(half)  # n/2 for even n
    odd_start = Sub(
        Const(nr, 0, REAL),
        Add(FloorF(half), Const(nr, 1, REAL)),
    )  # -(n+1)/2 for odd n
    start = Add(
        Mul(Sub(Const(nr, 1, REAL), parity), even_start),
        Mul(parity, odd_start),
    )
    return Add(start, r)


def randomise_sfinite(sigma, target=NATUNIT, tol=DEFAULT_TOL) -> Randomiser:
    """A randomiser over counting_N (x) uniform[0,1), optionally repacked
    onto [0, inf) or the whole line through the measure isomorphisms."""
    mu, input_space = _as_measure(sigma)
    det_nu = _lebesgue_slices_det(mu)
    if det_nu is None:
        prefix, cycle = _subprob_piece_dets(mu, tol)
        det_nu = NatIndexed(tuple(prefix), tuple(cycle), mu.space)
    if target == NATUNIT:
        det = Compose(det_nu, Proj2(Prod(input_space, Prod(NAT, REAL))))
        return Randomiser(NATUNIT, det, tol, input_space, mu.space)
    unpack = fn_halfline_to_nat_unit()
    det_h = Compose(det_nu, unpack)
    if target == HALFLINE:
        det = Compose(det_h, Proj2(Prod(input_space, REAL)))
        return Randomiser(HALFLINE, det, tol, input_space, mu.space)
    if target == REALLINE:
        det_rl = Compose(det_h, fn_iso_real_to_halfline())
        det = Compose(det_rl, Proj2(Prod(input_space, REAL)))
        return Randomiser(REALLINE, det, tol, input_space, mu.space)
    raise Unsupported(f"unknown randomiser target {target!r}")


# ---------------------------------------------------------------------------
# the measure isomorphisms


def iso_nat_unit_to_halfline(p):
    """(n, u) |-> n + u."""
    n, u = p
    check_point(n, NAT)
    if not 0 <= u < 1:
        raise TypeMismatch(f"unit coordinate {u!r} outside [0, 1)")
    return n + u


def iso_halfline_to_nat_unit(h):
    """h |-> (floor(h), h - floor(h))."""
    if h < 0:
        raise TypeMismatch(f"{h!r} is not on the half-line")
    n = math.floor(h)
    return (n, h - n)


def fn_nat_unit_to_halfline() -> FnExpr:
    nr = Prod(NAT, REAL)
    from .funcs import NatToReal

    return Add(NatToReal(Proj1(nr)), Proj2(nr))


def fn_halfline_to_nat_unit() -> FnExpr:
    x = Id(REAL)
    return PairFn(NatOfFloor(x), Sub(x, FloorF(x)))


def iso_real_to_halfline(r):
    """Interleave the line onto the half-line: r in [n, n+1) goes to
    r + floor(r) (even offsets), r in [-n-1, -n) to r - 3 floor(r) - 1
    (odd offsets).  Exact on rationals."""
    fl = math.floor(r)
    if r >= 0:
        return r + fl
    return r - 3 * fl - 1


def iso_halfline_to_real(h):
    if h < 0:
        raise TypeMismatch(f"{h!r} is not on the half-line")
    m = math.floor(h)
    if m % 2 == 0:
        return h - m // 2
    return h - 3 * ((m - 1) // 2) - 2


def fn_iso_real_to_halfline() -> FnExpr:
    x = Id(REAL)
    fl = FloorF(x)
    pos = Add(x, fl)
    neg = Sub(Sub(x, Mul(Const(REAL, 3, REAL), fl)), Const(REAL, 1, REAL))
    return IfSet(interval(0, POS_INF, True, False), pos, neg)


def fn_iso_halfline_to_real() -> FnExpr:
    x = Id(REAL)
    fl = FloorF(x)
    half_fl = FloorF(Mul(Const(REAL, Fraction(1, 2), REAL), fl))
    parity = Sub(fl, Mul(Const(REAL, 2, REAL), half_fl))
    even_branch = Sub(x, half_fl)
    odd_branch = Sub(
        Sub(x, Mul(Const(REAL, 3, REAL), half_fl)), Const(REAL, 2, REAL)
    )
    one = Const(REAL, 1, REAL)
    return Add(
        Mul(Sub(one, parity), even_branch), Mul(parity, odd_branch)
    )


def iso_real_image_interval(lo, hi) -> SetExpr:
    """Exact image of [lo, hi) under the real-to-halfline interleaving,
    computed unit interval by unit interval."""
    lo, hi = Fraction(lo), Fraction(hi)
    pieces = []
    n = math.floor(lo)
    while n < hi:
        a = max(lo, Fraction(n))
        b = min(hi, Fraction(n + 1))
        if a < b:
            fa = iso_real_to_halfline(a)
            pieces.append(Interval(fa, fa + (b - a), True, False))
        n += 1
    return real_set(pieces)


def iso_real_preimage_interval(lo, hi) -> SetExpr:
    """Exact preimage of a half-line interval [lo, hi) under the
    interleaving (equivalently the image under its inverse)."""
    lo, hi = Fraction(lo), Fraction(hi)
    pieces = []
    m = math.floor(lo)
    while m < hi:
        a = max(lo, Fraction(m))
        b = min(hi, Fraction(m + 1))
        if a < b:
            ra = iso_halfline_to_real(a)
            pieces.append(Interval(ra, ra + (b - a), True, False))
        m += 1
    return real_set(pieces)


# ---------------------------------------------------------------------------
# total randomisation


def shell_radius(mu: MeasureExpr, n, tol=DEFAULT_TOL) -> float:
    """inf{r : mu([-r, r]) >= n} by monotone bisection."""
    if n == 0:
        return 0.0
    lo, hi = 0.0, 1.0
    while float(measure_of(mu, interval(-hi, hi), tol=tol).value) < n:
        hi *= 2
        if hi > 1e12:
            raise FiniteTotalMass("mass function never reaches the target")
    for _ in range(MAX_BISECT):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if float(measure_of(mu, interval(-mid, mid), tol=tol).value) >= n:
            hi = mid
        else:
            lo = mid
    return hi


def total_randomise(sigma: MeasureExpr, tol=DEFAULT_TOL) -> FnExpr:
    """A total function on the reals whose Lebesgue pushforward re-denotes
    sigma; exists exactly when sigma's total mass is infinite."""
    mass = total_mass(sigma, tol=tol, max_terms=4096)
    certified_infinite = (mass.mode == "exact" and mass.value.is_inf) or (
        mass.mode == "diverges"
    )
    if not certified_infinite:
        if mass.value.is_inf:
            raise Unsupported("cannot certify infinite mass from this presentation")
        raise FiniteTotalMass(f"total mass {mass.value} is finite")
    base = randomise_sfinite(sigma, target=NATUNIT, tol=tol)
    det_nu = _strip_input(base.det)
    t0 = _first_target_point(sigma)

    # pack [0, inf) onto the active slices: cumulative starts c_n, each
    # unit of source land in slice n's live region [0, m_n)
    masses_cache = {}

    def slice_mass(n):
        if n not in masses_cache:
            masses_cache[n] = _slice_live_mass(det_nu, n, tol)
        return masses_cache[n]

    def case_at(idx):
        # figure out which slice the idx-th unit source interval feeds
        acc = 0.0
        n = 0
        target_lo = float(idx)
        for _ in range(10**6):
            m = slice_mass(n)
            if acc + m > target_lo + 1e-15:
                break
            acc += m
            n += 1
        # source u in [0,1) maps into slice n at offset (target_lo - acc) + u,
        # spilling into later slices when the live region runs out
        offset = target_lo - acc

        def piecewise(u, n=n, offset=offset):
            pos = offset + u
            nn = n
            while True:
                m = slice_mass(nn)
                if pos < m - 1e-15 or (m > 0 and pos < m):
                    v = det_nu._eval((nn, pos))
                    if v is BOTTOM:
                        return t0
                    return v
                pos -= m
                nn += 1
                if nn > 10**6:
                    return t0

        return _CallableFn(piecewise, REAL, sigma.space)

    packed = LazyIndexed(case_at, sigma.space)
    iso = fn_iso_real_to_halfline()
    return _TotalFn(Compose(packed, iso), t0, sigma.space)


def _slice_live_mass(det_nu, n, tol) -> float:
    """Length of the defined region of slice n of a NatUnit det."""
    if isinstance(det_nu, NatIndexed):
        fn = det_nu._case(n)
        if fn is None:
            return 0.0
        pre = preimage(fn, FullSet(det_nu.target)) if _preimageable(fn) else None
        if pre is not None:
            from .sets import intersect

            live = intersect(pre, interval(0, 1, True, False))
            return float(lebesgue_length(live))
        # numeric fallback: probe the definedness boundary
        return _live_mass_by_probes(fn)
    # closed-form slice maps (plain Lebesgue) are fully live
    return 1.0


def _preimageable(fn) -> bool:
    try:
        preimage(fn, FullSet(fn.cod))
        return True
    except Unsupported:
        return False
    except TypeMismatch:
        return False


def _live_mass_by_probes(fn, grid=512) -> float:
    live = 0
    for i in range(grid):
        u = (i + 0.5) / grid
        if fn._eval(u) is not BOTTOM:
            live += 1
    return live / grid


def _strip_input(det: FnExpr) -> FnExpr:
    """Remove the input-projection wrapper from a constant randomiser."""
    if isinstance(det, Compose) and isinstance(det.inner, Proj2):
        return det.outer
    return det


def _first_target_point(sigma: MeasureExpr):
    nf = normalize(sigma)
    for w, b in nf.pieces:
        from .measures import base_atoms

        atoms = base_atoms(b)
        if atoms:
            return atoms[0]
        if isinstance(b, LebesgueDensity):
            supp = b.support
            if isinstance(supp, FullSet):
                return 0
            if supp.intervals:
                iv = supp.intervals[0]
                if iv.lo == NEG_INF or iv.hi == POS_INF:
                    return 0 if iv.lo == NEG_INF and iv.hi == POS_INF else (
                        float(iv.hi) - 1 if iv.lo == NEG_INF else float(iv.lo) + 1
                    )
                return (iv.lo + iv.hi) / 2
            if supp.atoms_in:
                return supp.atoms_in[0]
    from .kernels import _witness_point

    return _witness_point(sigma.space)


@dataclass(frozen=True, eq=False)
class _CallableFn(FnExpr):
    """Internal wrapper for computed slice maps (pure closures)."""

    fn: object
    _dom: SpaceExpr
    _cod: SpaceExpr

    @property
    def dom(self):
        return self._dom

    @property
    def cod(self):
        return self._cod

    def _eval(self, p):
        return self.fn(p)


@dataclass(frozen=True, eq=False)
class _TotalFn(FnExpr):
    """A function made total by sending residual undefined points to t0."""

    inner: FnExpr
    fallback: object
    _cod: SpaceExpr

    @property
    def dom(self):
        return self.inner.dom

    @property
    def cod(self):
        return self._cod

    def _eval(self, p):
        v = self.inner._eval(p)
        return self.fallback if v is BOTTOM else v


# ---------------------------------------------------------------------------
# sampling


def derived_seed(seed: int, index: int) -> int:
    """The documented pure map from (seed, range start) to a child seed."""
    import hashlib

    h = hashlib.sha256(f"{seed}:{index}".encode()).digest()
    return int.from_bytes(h[:8], "big")


def sample_via(r: Randomiser, s, seed: int, n: int):
    """n driven draws of det(s, -).  Unit01 sources draw uniforms; the
    infinite-mass sources run stratified passes over the slices 0..N (and
    therefore estimate integrals against the infinite source only through
    importance weighting downstream, never as a normalised law)."""
    import random as _random

    check_point(s, r.input_space)
    rng = _random.Random(seed)
    out = []
    if r.source == UNIT01:
        for _ in range(n):
            u = rng.random()
            out.append(eval_fn(r.det, (s, u)))
        return out
    # stratified slice schedule for infinite-mass sources
    produced = 0
    for level in itertools.count():
        for slice_idx in range(level + 1):
            if produced >= n:
                return out
            u = rng.random()
            if r.source == NATUNIT:
                point = (s, (slice_idx, u))
            elif r.source == HALFLINE:
                point = (s, slice_idx + u)
            else:
                point = (s, iso_halfline_to_real(slice_idx + u))
            out.append(eval_fn(r.det, point))
            produced += 1
    return out

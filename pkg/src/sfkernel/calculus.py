"""The main theorems as algorithms: Radon-Nikodym derivatives under
0-inf-absolute continuity, almost-everywhere-inf uniqueness checking,
the three-part Lebesgue decomposition, and disintegration.

All operations work on a structured fragment (constant kernels built from
atoms, counting pieces, pmf families, and piecewise densities, plus the
score pattern) and raise Unsupported outside it.  Division never produces
a silent infinity: the 0-inf-absolute-continuity precondition is checked
first, and the derivative's value on the reference's infinity region is
the canonical 1 on the charged part and 0 on the null part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    InftyCompatibilityFailed,
    NotAbsCont,
    NotZeroInftyAbsCont,
    TypeMismatch,
    Unsupported,
)
from .extreal import INF, ONE, ZERO, ExtReal, as_ext, ext_mul, rn_div
from .funcs import (
    Compose,
    Const,
    ExtDivFn,
    ExtLit,
    ExtMulFn,
    FnExpr,
    Id,
    IfSet,
    Indicator,
    PairFn,
    Proj1,
    Proj2,
    as_weight,
    eval_fn,
    partial_left,
)
from .kernels import (
    ConstK,
    Det,
    KernelExpr,
    PMClosed,
    PMDensity,
    PMDirac,
    PMPiece,
    PMProd,
    ParamK,
    PLAIN,
    ScoreK,
    SupportDescriptor,
    ZERO_INFTY,
    ZeroK,
    abs_continuous,
    as_const_measure,
    eval_kernel,
    measure_abs_continuous,
    mutually_singular,
    push_measure,
    score_measure,
    sup_mass_bound,
)
from .measures import (
    CountingFin,
    CountingNat,
    DiracB,
    JointDensity,
    LebesgueDensity,
    MeasureExpr,
    ProductBase,
    Weighted,
    ZeroMeasure,
    base_support,
    canonical_probes,
    integrate,
    measure_of,
    normalize,
    restrict_measure,
    scale_measure,
    singleton_set,
    sum_measures,
    support_set,
    top_zero_infty_set,
    total_mass,
)
from .sets import (
    EmptySet,
    FullSet,
    SetExpr,
    complement,
    difference,
    enumerate_set,
    intersect,
    is_empty_set,
    member,
    rectangle,
    union_all,
)
from .spaces import (
    Fin,
    Nat,
    Prod,
    REAL,
    Real,
    SpaceExpr,
    Unit,
    enumerate_points,
    is_finite_space,
)


# ---------------------------------------------------------------------------
# result records


@dataclass(frozen=True)
class RnResult:
    derivative: FnExpr  # on Prod(dom, cod), valued in [0, inf]
    infty_region: SetExpr  # the reference's top 0-inf set used


@dataclass(frozen=True)
class LebesgueParts:
    k_a: KernelExpr
    k_infty: KernelExpr
    k_s: KernelExpr
    support_a: SupportDescriptor
    support_infty: SupportDescriptor
    support_s: SupportDescriptor
    witness_s: SetExpr  # l lives inside this; k_s outside it
    witness_infty: SetExpr  # the l-0-inf region carrying k_infty


@dataclass(frozen=True)
class Disintegration:
    kernel: KernelExpr  # Z x Y ~> X
    support_check: object  # y -> SetExpr: the fibre carrying k(z, y)


# ---------------------------------------------------------------------------
# weight-function views of a normal form


def _atom_weight_fn(nf, space) -> FnExpr:
    """The function y -> (total atomic weight of the measure at y), as a
    term; zero where no atom lives."""
    terms = []
    for w, b in nf.pieces:
        if isinstance(b, DiracB):
            terms.append(
                IfSet(
                    singleton_set(b.point, space),
                    ExtLit(space, w),
                    ExtLit(space, ZERO),
                )
            )
        elif isinstance(b, (CountingFin, CountingNat)):
            terms.append(ExtMulFn(ExtLit(space, w), Indicator(b.set_expr)))
    for lz in nf.lazy:
        fam = lz.family
        if fam and fam[0] == "nat-pmf":
            pmf, supp = fam[1], fam[2]
            terms.append(ExtMulFn(pmf, Indicator(supp)))
    if not terms:
        return ExtLit(space, ZERO)
    out = terms[0]
    for t in terms[1:]:
        out = _ext_add(out, t)
    return out


def _ext_add(a, b):
    from .funcs import ExtAddFn

    return ExtAddFn(a, b)


def _density_weight_fn(nf, space) -> FnExpr:
    """The function y -> (total Lebesgue density of the measure at y)."""
    terms = []
    for w, b in nf.pieces:
        if isinstance(b, LebesgueDensity):
            dens = (
                ExtLit(space, w)
                if b.density is None
                else ExtMulFn(ExtLit(space, w), b.density)
            )
            terms.append(ExtMulFn(dens, Indicator(b.support)))
        elif isinstance(b, (ProductBase, JointDensity)):
            raise Unsupported("derivatives over product bases")
    if not terms:
        return ExtLit(space, ZERO)
    out = terms[0]
    for t in terms[1:]:
        out = _ext_add(out, t)
    return out


def _atomic_region(nf, space) -> SetExpr:
    parts = []
    for w, b in nf.pieces:
        if isinstance(b, (DiracB, CountingFin, CountingNat)):
            parts.append(base_support(b))
    for lz in nf.lazy:
        fam = lz.family
        if fam and fam[0] == "nat-pmf":
            parts.append(fam[2])
    return union_all(parts, space)


def measure_rn_derivative(mu_p: MeasureExpr, mu: MeasureExpr) -> FnExpr:
    """Pointwise derivative of mu_p against mu on their shared space.

    Atom weights divide by atom weights and densities by densities, on a
    common refinement; on the reference's infinity region the rn-division
    conventions (inf/inf = 1, 0/inf = 0) produce the canonical choice."""
    if mu_p.space != mu.space:
        raise TypeMismatch("derivative of measures on different spaces")
    if not measure_abs_continuous(mu_p, mu, ZERO_INFTY):
        raise NotZeroInftyAbsCont(
            "the compared measure is not 0-inf-absolutely continuous"
        )
    space = mu.space
    nf_p = normalize(mu_p)
    nf = normalize(mu)
    atom_region = _atomic_region(nf, space)
    atom_ratio = ExtDivFn(_atom_weight_fn(nf_p, space), _atom_weight_fn(nf, space))
    dens_ratio = ExtDivFn(_density_weight_fn(nf_p, space), _density_weight_fn(nf, space))
    if isinstance(atom_region, EmptySet):
        return dens_ratio
    if isinstance(atom_region, FullSet):
        return atom_ratio
    return IfSet(atom_region, atom_ratio, dens_ratio)


# ---------------------------------------------------------------------------
# Radon-Nikodym for kernels


def rn_derivative(nu_p: KernelExpr, nu: KernelExpr) -> RnResult:
    """The density of nu_p with respect to nu, as a term on dom x cod."""
    if nu_p.dom != nu.dom or nu_p.cod != nu.cod:
        raise TypeMismatch("derivative needs kernels of one type")
    pair_space = Prod(nu.dom, nu.cod)
    try:
        ok = abs_continuous(nu_p, nu, ZERO_INFTY)
    except Unsupported:
        if isinstance(nu_p, ScoreK) and nu_p.kernel == nu:
            return RnResult(nu_p.fn, _kernel_top_region(nu))
        raise
    if not ok:
        raise NotZeroInftyAbsCont(
            "precondition failed: the pair is not 0-inf-absolutely continuous"
        )
    if isinstance(nu_p, ScoreK) and nu_p.kernel == nu:
        return RnResult(nu_p.fn, _kernel_top_region(nu))
    m_p = as_const_measure(nu_p)
    m = as_const_measure(nu)
    if m_p is None or m is None:
        raise Unsupported("derivative outside the constant fragment")
    d = measure_rn_derivative(m_p, m)
    lifted = _lift_to_pair(d, nu.dom)
    return RnResult(lifted, _kernel_top_region(nu))


def _lift_to_pair(d: FnExpr, dom: SpaceExpr) -> FnExpr:
    pair_space = Prod(dom, d.dom)
    return Compose(d, Proj2(pair_space)) if d.dom != pair_space else d


def _kernel_top_region(k: KernelExpr) -> SetExpr:
    mu = as_const_measure(k)
    pair_space = Prod(k.dom, k.cod)
    if mu is None:
        return EmptySet(pair_space)
    top = top_zero_infty_set(mu)
    if is_empty_set(top):
        return EmptySet(pair_space)
    return rectangle(FullSet(k.dom), top)


# ---------------------------------------------------------------------------
# uniqueness criterion


def _value_regions(f: FnExpr):
    """[(region, value)] partition with an explicit zero region, or None."""
    from .measures import piecewise_constant_parts

    parts = piecewise_constant_parts(f)
    if parts is None:
        return None
    space = f.dom
    covered = union_all([s for s, _ in parts], space)
    regions = list(parts)
    rest = complement(covered)
    if not is_empty_set(rest):
        regions.append((rest, ZERO))
    return regions


def rn_equal(f: FnExpr, g: FnExpr, nu) -> bool:
    """Almost-everywhere-inf equality of two candidate derivatives against
    the reference nu: equal off nu's infinity region, and jointly zero or
    jointly positive on it."""
    if isinstance(nu, KernelExpr):
        mu = as_const_measure(nu)
        if mu is None:
            raise Unsupported("uniqueness check outside the constant fragment")
    else:
        mu = nu
    space = mu.space
    if f.dom != space and isinstance(f.dom, Prod) and f.dom.right == space:
        # derivatives on dom x cod against a constant reference: compare
        # the output-coordinate behaviour
        witness = _any_point(f.dom.left)
        f = partial_left(f, witness)
        g = partial_left(g, witness)
    if f == g:
        return True
    top = top_zero_infty_set(mu)
    diff, f0_not_g, g0_not_f = _difference_regions(f, g, space)
    checks = [
        intersect(diff, complement(top)),
        intersect(g0_not_f, top),
        intersect(f0_not_g, top),
    ]
    total = ZERO
    for region in checks:
        r = measure_of(mu, region)
        total = total + r.value
    return total.is_zero


def _difference_regions(f, g, space):
    rf = _value_regions(f)
    rg = _value_regions(g)
    if rf is None or rg is None:
        if is_finite_space(space):
            return _difference_regions_pointwise(f, g, space)
        raise Unsupported("uniqueness regions need piecewise-constant terms")
    agree_parts = []
    f0_parts = []
    g0_parts = []
    for sf, vf in rf:
        for sg, vg in rg:
            cell = intersect(sf, sg)
            if is_empty_set(cell):
                continue
            if vf == vg:
                agree_parts.append(cell)
            if vf == ZERO and vg != ZERO:
                f0_parts.append(cell)
            if vg == ZERO and vf != ZERO:
                g0_parts.append(cell)
    agree = union_all(agree_parts, space)
    return complement(agree), union_all(f0_parts, space), union_all(g0_parts, space)


def _difference_regions_pointwise(f, g, space):
    diff, f0, g0 = [], [], []
    for p in enumerate_points(space):
        vf = as_weight(eval_fn(f, p))
        vg = as_weight(eval_fn(g, p))
        if vf != vg:
            diff.append(p)
        if vf.is_zero and not vg.is_zero:
            f0.append(p)
        if vg.is_zero and not vf.is_zero:
            g0.append(p)

    def to_set(pts):
        return union_all([singleton_set(p, space) for p in pts], space)

    return to_set(diff), to_set(f0), to_set(g0)


def _any_point(space: SpaceExpr):
    from .kernels import _witness_point

    return _witness_point(space)


# ---------------------------------------------------------------------------
# Lebesgue decomposition


def lebesgue_decompose(k: KernelExpr, l: KernelExpr) -> LebesgueParts:
    """k = k_a + k_inf + k_s with k_a <<_inf l, k_inf inf-singular w.r.t.
    l, and k_s mutually singular with l; follows the factor-split-carve
    construction."""
    if k.dom != l.dom or k.cod != l.cod:
        raise TypeMismatch("decomposition needs kernels of one type")
    mk = as_const_measure(k)
    ml = as_const_measure(l)
    if mk is None or ml is None:
        raise Unsupported("decomposition outside the constant fragment")
    space = k.cod
    dom = k.dom
    parts = measure_lebesgue_decompose(mk, ml)
    mu_a, mu_inf, mu_s, s_l, t_l = parts

    def wrap(mu):
        return ConstK(dom, mu) if not isinstance(mu, ZeroMeasure) else ZeroK(dom, space)

    return LebesgueParts(
        k_a=wrap(mu_a),
        k_infty=wrap(mu_inf),
        k_s=wrap(mu_s),
        support_a=SupportDescriptor(_support_or_empty(mu_a, space)),
        support_infty=SupportDescriptor(_support_or_empty(mu_inf, space)),
        support_s=SupportDescriptor(_support_or_empty(mu_s, space)),
        witness_s=rectangle(FullSet(dom), s_l),
        witness_infty=rectangle(FullSet(dom), t_l),
    )


def _support_or_empty(mu, space):
    if isinstance(mu, ZeroMeasure):
        return EmptySet(space)
    try:
        return support_set(mu)
    except Unsupported:
        return FullSet(space)


def measure_lebesgue_decompose(mk: MeasureExpr, ml: MeasureExpr):
    """Returns (mu_a, mu_inf, mu_s, carrier(l), top(l))."""
    space = mk.space
    t_k = top_zero_infty_set(mk)
    t_l = top_zero_infty_set(ml)
    nf_k = normalize(mk)
    nf_l = normalize(ml)
    # where l charges atoms, and where it has continuous mass
    atomic_l = _atomic_region(nf_l, space)
    cont_l_parts = [
        base_support(b) for w, b in nf_l.pieces if isinstance(b, LebesgueDensity)
    ]
    for w, b in nf_l.pieces:
        if isinstance(b, (ProductBase, JointDensity)):
            raise Unsupported("decomposition over product bases")
    cont_l = union_all(cont_l_parts, space)
    carrier_l = union_all([atomic_l, cont_l], space)

    a_parts, inf_parts, s_parts = [], [], []
    carve = difference(t_l, t_k)

    def place(piece: MeasureExpr, absorbing: SetExpr):
        """Split one sigma-finite piece of k against l's carrier and the
        0-inf carve region."""
        sing = restrict_measure(piece, complement(absorbing))
        if not isinstance(sing, ZeroMeasure):
            s_parts.append(sing)
        ainf = restrict_measure(piece, absorbing)
        if isinstance(ainf, ZeroMeasure):
            return
        inf_part = restrict_measure(ainf, carve)
        if not isinstance(inf_part, ZeroMeasure):
            inf_parts.append(inf_part)
        a_part = restrict_measure(ainf, complement(carve))
        if not isinstance(a_part, ZeroMeasure):
            a_parts.append(a_part)

    for w, b in nf_k.pieces:
        piece = Weighted(w, b)
        if isinstance(b, (DiracB, CountingFin, CountingNat)):
            place(piece, atomic_l)
        elif isinstance(b, LebesgueDensity):
            place(piece, cont_l)
        else:
            raise Unsupported("decomposition over product bases")
    for lz in nf_k.lazy:
        fam = lz.family
        if fam and fam[0] == "nat-pmf":
            place(lz, atomic_l)
        else:
            raise Unsupported("decomposition with window families")

    mu_a = sum_measures(a_parts, space)
    mu_inf = sum_measures(inf_parts, space)
    mu_s = sum_measures(s_parts, space)
    return mu_a, mu_inf, mu_s, carrier_l, t_l


# ---------------------------------------------------------------------------
# disintegration


def disintegrate(mu: KernelExpr, nu: KernelExpr, phi: FnExpr) -> Disintegration:
    """A kernel k on (dom x Y) ~> X with integral nu(z, dy) k(z, y, -)
    reconstituting mu(z), concentrated on the phi-fibres."""
    if mu.dom != nu.dom:
        raise TypeMismatch("disintegration inputs need one parameter space")
    if phi.dom != mu.cod or phi.cod != nu.cod:
        raise TypeMismatch("phi must map mu's target onto nu's target")
    x_space, y_space, z_space = mu.cod, nu.cod, mu.dom
    if (
        is_finite_space(z_space)
        and is_finite_space(x_space)
        and is_finite_space(y_space)
    ):
        return _disintegrate_finite(mu, nu, phi)
    m_mu = as_const_measure(mu)
    m_nu = as_const_measure(nu)
    if m_mu is None or m_nu is None:
        raise Unsupported("disintegration outside the supported cases")
    _check_infty_compatibility(m_mu, m_nu, phi)
    if isinstance(x_space, Prod) and isinstance(phi, Proj1) and x_space.left == y_space:
        return _disintegrate_joint(mu, m_mu, m_nu, phi)
    raise Unsupported("disintegration outside the supported cases")


def _check_infty_compatibility(m_mu, m_nu, phi):
    """mu(phi^{-1}(inf[nu]) minus inf[mu]) must vanish."""
    from .funcs import preimage

    t_nu = top_zero_infty_set(m_nu)
    t_mu = top_zero_infty_set(m_mu)
    if is_empty_set(t_nu):
        return
    try:
        pre = preimage(phi, t_nu)
    except Unsupported:
        raise Unsupported("cannot compute the fibre of the infinity region")
    bad = difference(pre, t_mu)
    r = measure_of(m_mu, bad)
    if not r.value.is_zero:
        raise InftyCompatibilityFailed(
            "mass escapes to the marginal's 0-inf region with no matching "
            "0-inf structure upstream"
        )


def _disintegrate_finite(mu, nu, phi) -> Disintegration:
    """Exact conditional tables on finite discrete spaces."""
    z_space, x_space, y_space = mu.dom, mu.cod, nu.cod
    zs = enumerate_points(z_space)
    xs = enumerate_points(x_space)
    ys = enumerate_points(y_space)
    fibres = {y: [x for x in xs if eval_fn(phi, x) == y] for y in ys}
    rows = {}
    for z in zs:
        m_z = eval_kernel(mu, z)
        n_z = eval_kernel(nu, z)
        mu_w = {x: measure_of(m_z, singleton_set(x, x_space)).value for x in xs}
        nu_w = {y: measure_of(n_z, singleton_set(y, y_space)).value for y in ys}
        # phi_* mu << nu, pointwise
        for y in ys:
            pushed = sum((mu_w[x] for x in fibres[y]), ZERO)
            if nu_w[y].is_zero and not pushed.is_zero:
                raise NotAbsCont("the pushforward escapes the marginal's support")
        # infinity compatibility, pointwise
        t_mu = {x for x in xs if mu_w[x].is_inf}
        t_nu = {y for y in ys if nu_w[y].is_inf}
        for y in t_nu:
            for x in fibres[y]:
                if x not in t_mu and not mu_w[x].is_zero:
                    raise InftyCompatibilityFailed(
                        "finite mass sits over an infinite marginal atom"
                    )
        for y in ys:
            rows[(z, y)] = {x: rn_div(mu_w[x], nu_w[y]) for x in fibres[y]}
    from .kernels import table_kernel

    kernel = table_kernel(Prod(z_space, y_space), x_space, rows)
    return Disintegration(
        kernel=kernel,
        support_check=lambda y: union_all(
            [singleton_set(x, x_space) for x in fibres[y]], x_space
        ),
    )


def _disintegrate_joint(mu, m_mu, m_nu, phi) -> Disintegration:
    """X = Y x X', phi = Proj1: conditional slices of a (possibly mixed)
    joint, normalised by the marginal."""
    x_space = mu.cod
    y_space, xp_space = x_space.left, x_space.right
    z_space = mu.dom
    dom = Prod(z_space, y_space)
    nf = normalize(m_mu)
    # discrete first coordinate: pieces delta_c (x) slice_c
    slices = {}
    for w, b in nf.pieces:
        if isinstance(b, ProductBase) and isinstance(b.left, DiracB):
            c = b.left.point
            slices.setdefault(c, []).append(Weighted(w, b.right))
        elif isinstance(b, JointDensity):
            return _disintegrate_joint_density(mu, m_mu, m_nu)
        else:
            raise Unsupported("joint disintegration needs dirac-slice or joint-density pieces")
    if nf.lazy:
        raise Unsupported("joint disintegration with lazy pieces")
    # marginal << nu on the atoms
    pieces = []
    for c, parts in sorted(slices.items(), key=lambda kv: repr(kv[0])):
        slice_c = sum_measures(parts, xp_space)
        m_c = measure_of(m_nu, singleton_set(c, y_space))
        slice_mass = total_mass(slice_c)
        if m_c.value.is_zero and not slice_mass.value.is_zero:
            raise NotAbsCont("the pushforward escapes the marginal's support")
        inv = rn_div(ONE, m_c.value)
        row = scale_measure(inv, slice_c)
        row_nf = normalize(row)
        weight_gate = Compose(Indicator(singleton_set(c, y_space)), Proj2(dom))
        for w, b in row_nf.pieces:
            pieces.append(
                PMPiece(
                    ExtMulFn(weight_gate, ExtLit(dom, w)),
                    PMProd(PMClosed(DiracB(c, y_space)), PMClosed(b)),
                )
            )
    kernel = ParamK(dom, tuple(pieces))
    return Disintegration(
        kernel=kernel,
        support_check=lambda y: rectangle(
            singleton_set(y, y_space), FullSet(xp_space)
        ),
    )


def _disintegrate_joint_density(mu, m_mu, m_nu) -> Disintegration:
    """Fully continuous joint density on Real x Real with a marginal
    density: the conditional is the density ratio along the slice."""
    x_space = mu.cod
    y_space, xp_space = x_space.left, x_space.right
    z_space = mu.dom
    dom = Prod(z_space, y_space)
    nf = normalize(m_mu)
    joints = [(w, b) for w, b in nf.pieces if isinstance(b, JointDensity)]
    if len(joints) != 1 or len(nf.pieces) != 1 or nf.lazy:
        raise Unsupported("continuous disintegration needs a single joint piece")
    w, b = joints[0]
    nf_nu = normalize(m_nu)
    dens_nu = _density_weight_fn(nf_nu, y_space)
    pair_yx = Prod(REAL, REAL)
    # ratio((z, y), x') = w * joint(y, x') / marginal(y)
    reassoc = PairFn(Compose(Proj2(dom), Proj1(Prod(dom, REAL))), Proj2(Prod(dom, REAL)))
    joint_on = Compose(b.density, reassoc)
    marg_on = Compose(dens_nu, Compose(Proj2(dom), Proj1(Prod(dom, REAL))))
    ratio = ExtMulFn(ExtLit(Prod(dom, REAL), w), ExtDivFn(joint_on, marg_on))
    xp_support = union_all([rb for ra, rb in b.support.rects], REAL)
    y_support = union_all([ra for ra, rb in b.support.rects], REAL)
    piece = PMPiece(
        ONE,
        PMProd(
            PMDirac(Proj2(dom)),
            PMDensity(xp_support, ratio),
        ),
    )
    kernel = ParamK(dom, (piece,))
    return Disintegration(
        kernel=kernel,
        support_check=lambda y: rectangle(
            singleton_set(y, y_space), FullSet(xp_space)
        ),
    )

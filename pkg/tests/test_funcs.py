import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfkernel.errors import NumericDomain, TypeMismatch, Unsupported
from sfkernel.extreal import INF, ExtReal
from sfkernel.funcs import (
    AbsF,
    Add,
    CaseFn,
    Compose,
    Const,
    ExpF,
    ExtDivFn,
    ExtLit,
    ExtMulFn,
    FloorF,
    Id,
    IfSet,
    Indicator,
    InjL,
    InjR,
    LogF,
    Mul,
    NatOfFloor,
    NatToReal,
    Neg,
    PairFn,
    PdfBeta,
    PdfNormal,
    PdfPoisson,
    Proj1,
    Proj2,
    RestrictTo,
    SafeDiv,
    SqrtF,
    Sub,
    as_affine,
    compose,
    eval_fn,
    fn_pow,
    partial_left,
    preimage,
    scale,
)
from sfkernel.sets import (
    FullSet,
    complement,
    fin_set,
    interval,
    member,
    nat_set,
    real_atoms,
    union,
)
from sfkernel.spaces import BOTTOM, Fin, Inl, Inr, NAT, Prod, REAL, Sum


RID = Id(REAL)


def test_floor_examples():
    assert eval_fn(FloorF(RID), 2.7) == 2
    assert eval_fn(FloorF(RID), -0.5) == -1


def test_indicator_right_endpoint_excluded():
    f = Indicator(interval(0, 1, True, False))
    assert eval_fn(f, 1.0) == 0
    assert eval_fn(f, 0.0) == 1


def test_restrict_gives_bottom_outside():
    f = Compose(RestrictTo(interval(0, 1)), RID)
    assert eval_fn(f, 2.0) is BOTTOM
    assert eval_fn(f, 0.5) == 0.5


def test_pair_proj():
    sp = Prod(REAL, NAT)
    f = PairFn(Proj2(Prod(REAL, NAT)), Proj1(Prod(REAL, NAT)))
    with pytest.raises(TypeMismatch):
        eval_fn(f, (1, 1.5))
    assert eval_fn(Proj1(sp), (1.5, 3)) == 1.5


def test_case_and_injections():
    f = CaseFn(Add(RID, Const(REAL, 1, REAL)), NatToReal(Id(NAT)))
    assert eval_fn(f, Inl(2.0)) == 3.0
    assert eval_fn(f, Inr(7)) == 7


def test_arith_exactness():
    f = Add(Mul(Const(REAL, 2, REAL), RID), Const(REAL, Fraction(1, 2), REAL))
    v = eval_fn(f, Fraction(1, 4))
    assert v == 1 and isinstance(v, Fraction)


def test_safediv_zero_denominator():
    f = SafeDiv(Const(REAL, 1, REAL), RID)
    assert eval_fn(f, 0) == 0
    assert eval_fn(f, 2) == Fraction(1, 2)


def test_log_domain_error_distinct_from_bottom():
    with pytest.raises(NumericDomain):
        eval_fn(LogF(RID), -1.0)
    assert eval_fn(LogF(RID), 1.0) == 0.0


def test_sqrt_and_exp():
    assert eval_fn(SqrtF(RID), 4) == 2.0
    assert abs(eval_fn(ExpF(RID), 1) - math.e) < 1e-12


def test_ext_arithmetic():
    inf_on_left = IfSet(
        interval(0, Fraction(1, 2)), ExtLit(REAL, INF), ExtLit(REAL, 1)
    )
    assert eval_fn(inf_on_left, 0.25) == INF
    assert eval_fn(inf_on_left, 0.75) == 1
    ratio = ExtDivFn(ExtLit(REAL, 1), ExtLit(REAL, 0))
    assert eval_fn(ratio, 0.0) == INF


def test_ext_mul_with_indicator():
    f = ExtMulFn(ExtLit(REAL, 2), Indicator(interval(0, 1)))
    assert eval_fn(f, 0.5) == 2
    assert eval_fn(f, 3.0) == 0


def test_pdf_normal_value():
    f = PdfNormal(RID, Const(REAL, 0, REAL), Const(REAL, 1, REAL))
    assert abs(float(eval_fn(f, 0.0)) - 1 / math.sqrt(2 * math.pi)) < 1e-15


def test_pdf_beta_support():
    f = PdfBeta(RID, Const(REAL, 2, REAL), Const(REAL, 2, REAL))
    assert float(eval_fn(f, 0.5)) == pytest.approx(1.5)
    assert eval_fn(f, 1.5) == ExtReal(0)


def test_pdf_poisson_mass():
    f = PdfPoisson(Id(NAT), Const(NAT, 1, REAL))
    assert float(eval_fn(f, 0)) == pytest.approx(math.exp(-1))
    assert float(eval_fn(f, 2)) == pytest.approx(math.exp(-1) / 2)


def test_nat_of_floor():
    f = NatOfFloor(RID)
    assert eval_fn(f, 2.9) == 2
    assert eval_fn(f, -0.5) is BOTTOM


# -- preimage ----------------------------------------------------------------


def test_preimage_floor_atom():
    pre = preimage(FloorF(RID), real_atoms([2]))
    assert member(pre, 2.0) and member(pre, 2.9)
    assert not member(pre, 3.0) and not member(pre, 1.99)


def test_preimage_natoffloor():
    pre = preimage(NatOfFloor(RID), nat_set({2}))
    assert member(pre, 2.5) and not member(pre, 3.0) and not member(pre, -2.5)


def test_preimage_proj():
    sp = Prod(REAL, REAL)
    pre = preimage(Proj1(sp), interval(0, 1))
    assert member(pre, (0.5, 99.0))
    assert not member(pre, (1.5, 0.0))


def test_preimage_const():
    f = Const(REAL, 0.5, REAL)
    assert isinstance(preimage(f, interval(0, 1)), FullSet)
    assert not member(preimage(f, interval(2, 3)), 0.0)


def test_preimage_affine():
    f = Add(Mul(Const(REAL, 2, REAL), RID), Const(REAL, 1, REAL))  # 2x + 1
    pre = preimage(f, interval(0, 1))
    # 0 <= 2x+1 <= 1  <=>  -1/2 <= x <= 0
    assert member(pre, Fraction(-1, 4))
    assert member(pre, 0) and member(pre, Fraction(-1, 2))
    assert not member(pre, Fraction(1, 8))


def test_preimage_affine_negative_slope():
    f = Sub(Const(REAL, 1, REAL), RID)  # 1 - x
    pre = preimage(f, interval(0, 1, True, False))
    # 0 <= 1-x < 1  <=>  0 < x <= 1
    assert member(pre, 1) and member(pre, 0.5)
    assert not member(pre, 0)


def test_preimage_indicator():
    A = interval(0, 1)
    f = Indicator(A)
    assert preimage(f, real_atoms([1])) == A
    assert preimage(f, real_atoms([0])) == complement(A)


def test_preimage_ifset():
    f = IfSet(interval(0, POS := math.inf), FloorF(RID), Neg(FloorF(RID)))
    pre = preimage(f, real_atoms([2]))
    # floor(x) = 2 on [0,inf): [2,3); -floor(x) = 2 means floor(x) = -2: [-2,-1)
    assert member(pre, 2.5)
    assert member(pre, -1.5)
    assert not member(pre, -2.5) and not member(pre, 3.0)


def test_preimage_unsupported():
    with pytest.raises(Unsupported):
        preimage(Mul(RID, RID), interval(0, 1))


def test_as_affine():
    a, b = as_affine(compose(Neg(RID), Add(RID, Const(REAL, 3, REAL))))
    assert (a, b) == (-1, -3)


def test_fn_pow_and_scale():
    f = scale(6, Mul(RID, Sub(Const(REAL, 1, REAL), RID)))
    assert eval_fn(f, Fraction(1, 2)) == Fraction(3, 2)
    g = fn_pow(RID, 3)
    assert eval_fn(g, 2) == 8


def test_partial_left():
    sp = Prod(REAL, REAL)
    f = Sub(Proj1(sp), Proj2(sp))
    fx = partial_left(f, 3)
    assert eval_fn(fx, 1) == 2
    pre = preimage(fx, real_atoms([0]))
    assert member(pre, 3) and not member(pre, 2)


# -- property: preimage soundness over a generated structured fragment -------

_sets = st.one_of(
    st.builds(
        lambda a, b, lc, hc: interval(min(a, b), max(a, b), lc, hc),
        st.integers(-4, 4),
        st.integers(-4, 4),
        st.booleans(),
        st.booleans(),
    ),
    st.builds(lambda xs: real_atoms(xs), st.lists(st.integers(-4, 4), min_size=1, max_size=3)),
)


@st.composite
def _structured_fns(draw):
    depth = draw(st.integers(0, 2))

    def build(d):
        if d == 0:
            return draw(st.sampled_from([RID, FloorF(RID)]))
        choice = draw(st.integers(0, 4))
        inner = build(d - 1)
        if choice == 0:
            a = draw(st.integers(-3, 3))
            b = draw(st.integers(-3, 3))
            return Add(Mul(Const(REAL, a, REAL), inner), Const(REAL, b, REAL))
        if choice == 1:
            return Neg(inner)
        if choice == 2:
            return Compose(FloorF(RID), inner)
        if choice == 3:
            return IfSet(draw(_sets), inner, build(d - 1))
        return Compose(RestrictTo(draw(_sets)), inner)

    return build(depth)


@settings(max_examples=150, deadline=None)
@given(_structured_fns(), _sets, st.integers(-40, 40))
def test_preimage_soundness(f, s, numer):
    p = Fraction(numer, 8)
    pre = preimage(f, s)
    v = eval_fn(f, p)
    expected = v is not BOTTOM and member(s, v)
    assert member(pre, p) == expected

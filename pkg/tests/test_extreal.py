import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sfkernel.errors import Indeterminate, NumericDomain
from sfkernel.extreal import INF, ONE, ZERO, ExtReal, as_ext, ext_div, ext_mul, rn_div


def test_inf_times_zero_is_zero():
    assert ext_mul(INF, 0) == ZERO
    assert ext_mul(0, INF) == ZERO


def test_inf_times_positive_is_inf():
    assert ext_mul(INF, 2) == INF
    assert ext_mul(Fraction(1, 3), INF) == INF
    assert ext_mul(INF, INF) == INF


def test_finite_arithmetic_stays_exact():
    v = ext_mul(3, 4)
    assert v == 12
    assert v.is_exact
    assert (as_ext(Fraction(1, 3)) + as_ext(Fraction(1, 6))) == Fraction(1, 2)


def test_float_contaminates_exactness():
    assert not ext_mul(0.5, 2).is_exact


def test_div_by_inf_is_zero():
    assert ext_div(5, INF) == ZERO
    assert ext_div(0, INF) == ZERO


def test_inf_div_inf_is_indeterminate():
    with pytest.raises(Indeterminate):
        ext_div(INF, INF)


def test_div_conventions():
    assert ext_div(6, 3) == 2
    assert ext_div(5, 0) == INF
    assert ext_div(0, 0) == ZERO
    assert ext_div(INF, 2) == INF


def test_rn_div_total():
    assert rn_div(INF, INF) == ONE
    assert rn_div(3, 0) == INF
    assert rn_div(0, 0) == ZERO


def test_negative_rejected():
    with pytest.raises(NumericDomain):
        ExtReal(-1)
    with pytest.raises(NumericDomain):
        ExtReal(float("nan"))


def test_order():
    assert ZERO < ONE < INF
    assert not INF < INF
    assert INF <= INF
    assert as_ext(3) >= as_ext(3)


def test_float_conversion():
    assert float(INF) == math.inf
    assert float(as_ext(Fraction(1, 2))) == 0.5


_exts = st.one_of(
    st.integers(min_value=0, max_value=40).map(as_ext),
    st.fractions(min_value=0, max_value=40).map(as_ext),
    st.just(INF),
)


@given(_exts, _exts)
def test_mul_commutes(a, b):
    assert ext_mul(a, b) == ext_mul(b, a)


@given(_exts, _exts, _exts)
def test_mul_associates(a, b, c):
    assert ext_mul(ext_mul(a, b), c) == ext_mul(a, ext_mul(b, c))


@given(_exts, _exts, _exts)
def test_add_associates(a, b, c):
    assert (a + b) + c == a + (b + c)


@given(_exts, _exts, _exts)
def test_mul_monotone(a, b, c):
    if a <= b:
        assert ext_mul(a, c) <= ext_mul(b, c)

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfkernel.errors import TypeMismatch
from sfkernel.sets import (
    EmptySet,
    FullSet,
    Interval,
    NEG_INF,
    POS_INF,
    complement,
    count_members,
    difference,
    disjoint_rectangles,
    fin_set,
    intersect,
    interval,
    lebesgue_length,
    member,
    nat_set,
    prod_set,
    real_atoms,
    real_line,
    real_set,
    rectangle,
    section_at,
    sum_set,
    union,
)
from sfkernel.spaces import Fin, Inl, Inr, NAT, Prod, REAL, Sum, UNIT


def test_interval_membership():
    s = interval(0, 1, True, False)
    assert member(s, 0.5)
    assert member(s, 0)
    assert not member(s, 1)
    assert not member(s, 2)


def test_empty_set_has_no_members():
    assert not member(EmptySet(REAL), 0.0)
    assert not member(EmptySet(NAT), 3)


def test_cofinite_nat_exclusion():
    s = nat_set({0, 1}, cofinite=True)
    assert not member(s, 1)
    assert not member(s, 0)
    assert member(s, 2)
    assert member(s, 10**9)


def test_member_typechecks():
    with pytest.raises(TypeMismatch):
        member(interval(0, 1), "a")


def test_atom_adjusted_intervals_stay_distinct():
    half_open = interval(0, 1, True, False)
    closed = interval(0, 1, True, True)
    assert member(closed, 1) and not member(half_open, 1)
    assert lebesgue_length(half_open) == lebesgue_length(closed) == 1


def test_canonical_merging():
    s = union(interval(0, 1, True, False), interval(1, 2, True, True))
    assert member(s, 1)
    assert len(s.intervals) == 1
    assert lebesgue_length(s) == 2


def test_single_point_hole_becomes_exclusion():
    s = union(interval(0, Fraction(1, 2), True, False), interval(Fraction(1, 2), 1, False, True))
    assert len(s.intervals) == 1
    assert s.atoms_out == (Fraction(1, 2),)
    assert not member(s, Fraction(1, 2))
    s2 = union(s, real_atoms([Fraction(1, 2)]))
    assert s2.atoms_out == ()
    assert member(s2, Fraction(1, 2))


def test_degenerate_interval_is_atom():
    s = interval(3, 3)
    assert s.atoms_in == (Fraction(3),)
    assert member(s, 3)
    assert lebesgue_length(s) == 0


def test_complement_real():
    s = interval(0, 1, True, False)
    c = complement(s)
    assert member(c, 1)
    assert member(c, -0.1)
    assert not member(c, 0)
    assert complement(c) == s


def test_complement_roundtrip_with_atoms():
    s = real_set([Interval(Fraction(0), Fraction(2), True, True)], atoms_in=[5], atoms_out=[1])
    assert complement(complement(s)) == s


def test_fin_ops():
    sp = Fin(("a", "b", "c"))
    s = fin_set(sp, {"a"})
    t = fin_set(sp, {"b"})
    u = union(s, t)
    assert member(u, "a") and member(u, "b") and not member(u, "c")
    assert isinstance(union(u, fin_set(sp, {"c"})), FullSet)
    assert isinstance(intersect(s, t), EmptySet)


def test_prod_membership_and_sections():
    sp = Prod(REAL, REAL)
    r = prod_set(sp, [(interval(0, 1), interval(0, 1)), (interval(2, 3), interval(0, 5))])
    assert member(r, (0.5, 0.5))
    assert member(r, (2.5, 4.0))
    assert not member(r, (1.5, 0.5))
    sec = section_at(r, 2.5)
    assert member(sec, 4.0) and not member(sec, 6.0)


def test_prod_complement():
    sp = Prod(REAL, REAL)
    r = rectangle(interval(0, 1), interval(0, 1))
    c = complement(r)
    for p in [(0.5, 0.5), (2.0, 0.5), (0.5, 2.0), (-1.0, -1.0)]:
        assert member(c, p) == (not member(r, p))


def test_sum_sets():
    sp = Sum(REAL, NAT)
    s = sum_set(sp, interval(0, 1), nat_set({2}))
    assert member(s, Inl(0.5))
    assert member(s, Inr(2))
    assert not member(s, Inr(3))
    c = complement(s)
    assert member(c, Inr(3)) and not member(c, Inl(0.5))


def test_disjoint_rectangles_cover_exactly():
    sp = Prod(REAL, REAL)
    r = prod_set(sp, [(interval(0, 2), interval(0, 2)), (interval(1, 3), interval(1, 3))])
    pieces = disjoint_rectangles(r)
    rng = random.Random(7)
    for _ in range(200):
        p = (rng.uniform(-1, 4), rng.uniform(-1, 4))
        inside = sum(1 for a, b in pieces if member(a, p[0]) and member(b, p[1]))
        assert inside == (1 if member(r, p) else 0)


def test_count_members():
    assert count_members(nat_set({1, 2, 3})) == 3
    assert count_members(nat_set({1}, cofinite=True)).is_inf
    assert count_members(FullSet(Fin(("x", "y")))) == 2


def test_lebesgue_length_unbounded():
    assert lebesgue_length(real_line()).is_inf
    assert lebesgue_length(interval(2, 5)) == 3


# -- randomised properties ---------------------------------------------------

_endpoints = st.one_of(
    st.integers(min_value=-5, max_value=5).map(Fraction),
    st.fractions(min_value=-5, max_value=5),
)


@st.composite
def _real_sets(draw):
    n = draw(st.integers(min_value=0, max_value=3))
    ivs = []
    for _ in range(n):
        a = draw(_endpoints)
        b = draw(_endpoints)
        if a > b:
            a, b = b, a
        ivs.append(Interval(a, b, draw(st.booleans()), draw(st.booleans())))
    atoms_in = draw(st.lists(_endpoints, max_size=2))
    atoms_out = draw(st.lists(_endpoints, max_size=2))
    return real_set(ivs, atoms_in, atoms_out)


_probe = st.one_of(
    _endpoints,
    st.floats(min_value=-6, max_value=6, allow_nan=False),
)


@settings(max_examples=200)
@given(_real_sets(), _real_sets(), _probe)
def test_union_membership_law(a, b, p):
    assert member(union(a, b), p) == (member(a, p) or member(b, p))


@settings(max_examples=200)
@given(_real_sets(), _real_sets(), _probe)
def test_intersection_membership_law(a, b, p):
    assert member(intersect(a, b), p) == (member(a, p) and member(b, p))


@settings(max_examples=200)
@given(_real_sets(), _probe)
def test_complement_involution_and_membership(s, p):
    c = complement(s)
    assert member(c, p) == (not member(s, p))
    assert complement(c) == s


@settings(max_examples=200)
@given(_real_sets())
def test_canonicalisation_idempotent(s):
    if isinstance(s, (EmptySet, FullSet)):
        return
    again = real_set(s.intervals, s.atoms_in, s.atoms_out)
    assert again == s


@settings(max_examples=100)
@given(_real_sets(), _real_sets())
def test_difference_law(a, b):
    d = difference(a, b)
    for p in [-3, Fraction(-1, 2), 0, Fraction(1, 3), 1, 2.5, 4]:
        assert member(d, p) == (member(a, p) and not member(b, p))

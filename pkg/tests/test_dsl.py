from fractions import Fraction

import pytest

from sfkernel.dsl import (
    parse_fn,
    parse_kernel,
    parse_measure,
    parse_set,
    parse_space,
    read_sexpr,
    unparse_fn,
    unparse_kernel,
    unparse_measure,
    unparse_set,
    unparse_space,
)
from sfkernel.errors import ProgramSyntaxError
from sfkernel.funcs import eval_fn
from sfkernel.measures import measure_of, total_mass
from sfkernel.kernels import eval_kernel
from sfkernel.sets import interval, member
from sfkernel.spaces import Fin, NAT, Prod, REAL, UNIT


def test_parse_space_forms():
    assert parse_space(read_sexpr("(space (prod real nat))")) == Prod(REAL, NAT)
    assert parse_space("unit") == UNIT
    assert parse_space(read_sexpr("(fin a b c)")) == Fin(("a", "b", "c"))


def test_space_roundtrip():
    for src in ["unit", "real", "nat", "(fin x y)", "(prod real (sum nat real))"]:
        sp = parse_space(read_sexpr(src) if src.startswith("(") else src)
        assert parse_space(read_sexpr(unparse_space(sp)) if unparse_space(sp).startswith("(") else unparse_space(sp)) == sp


def test_parse_set_with_options():
    s = parse_set(read_sexpr("(set (union (ival 0 1 :lo closed :hi open) (atom 7/2)))"))
    assert member(s, 0) and not member(s, 1)
    assert member(s, Fraction(7, 2))


def test_set_roundtrip():
    sources = [
        "(ival 0 1 :lo closed :hi open)",
        "(union (ival 0 1) (ival 2 3) (atom 5))",
        "(inter (ival 0 10) (compl (atom 5)))",
        "(conat 0 1)",
        "(natset 2 3 5)",
    ]
    for src in sources:
        space = NAT if "nat" in src else REAL
        s = parse_set(read_sexpr(src), space)
        s2 = parse_set(read_sexpr(unparse_set(s)), space)
        assert s == s2


def test_parse_fn_compose_floor():
    f = parse_fn("(fn (compose floor (mul 2 id)))")
    assert eval_fn(f, 1.3) == 2
    assert eval_fn(f, Fraction(3, 4)) == 1


def test_fn_roundtrip():
    sources = [
        "(compose floor (mul 2 id))",
        "(ifset (ival 0 1) (extlit inf) (extlit 1))",
        "(add id (const 3))",
        "(pdf-normal id (const 0) (const 1))",
        "(ind (ival 0 1 :hi open))",
    ]
    for src in sources:
        f = parse_fn(src)
        f2 = parse_fn(unparse_fn(f))
        assert f == f2


def test_parse_measure_forms():
    mu = parse_measure("(lebesgue -inf inf)")
    assert measure_of(mu, interval(2, 5)).value == 3
    nu = parse_measure("(scale inf (dirac 0))")
    assert total_mass(nu).value.is_inf
    w = parse_measure("(sum (uniform 0 1) (dirac 2))")
    assert total_mass(w).value == 2


def test_measure_roundtrip():
    sources = [
        "(dirac 1/2)",
        "(scale inf (dirac 0))",
        "(sum (uniform 0 1) (scale 2 (dirac 3)))",
        "(lebesgue 0 1)",
        "(counting-nat all)",
        "(seqsum constant-repeat lebesgue)",
        "(seqsum geometric-weights 1/2 (dirac 0))",
        "(normal 0 1)",
        "(beta 2 3)",
        "(density (ival 0 1) (extmul (extlit 2) (ind (ival 0 1/2))))",
    ]
    for src in sources:
        mu = parse_measure(src)
        text = unparse_measure(mu)
        mu2 = parse_measure(text)
        assert unparse_measure(mu2) == text


def test_parse_kernel_forms():
    k = parse_kernel("(kcompose (det (fn (mul 2 id))) (det floor))", REAL)
    mu = eval_kernel(k, 1.3)
    from sfkernel.sets import real_atoms

    assert measure_of(mu, real_atoms([2])).value == 1


def test_kernel_roundtrip():
    sources = [
        "(det floor)",
        "(constk (uniform 0 1))",
        "(kpush (constk lebesgue) floor)",
        "(kscore (constk (uniform 0 1)) (extmul (extlit 2) (ind (rect full (ival 0 1/2)))))",
        "(prodr (constk (uniform 0 1)) (constk (uniform 2 3)))",
    ]
    for src in sources:
        k = parse_kernel(src, REAL if "floor" in src else UNIT)
        text = unparse_kernel(k)
        k2 = parse_kernel(text, REAL if "floor" in src else UNIT)
        assert unparse_kernel(k2) == text


def test_malformed_input_raises_with_position():
    with pytest.raises(ProgramSyntaxError):
        parse_measure("(dirac")
    with pytest.raises(ProgramSyntaxError):
        parse_measure("(frobnicate 1)")


def test_comments_are_ignored():
    mu = parse_measure("(dirac 1) ; a point mass\n")
    assert total_mass(mu).value == 1

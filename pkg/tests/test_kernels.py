import math
import random
from fractions import Fraction

import pytest

from sfkernel.errors import TypeMismatch, Unsupported
from sfkernel.extreal import INF, ONE, ZERO, ExtReal
from sfkernel.funcs import (
    Compose,
    Const,
    ExtLit,
    ExtMulFn,
    FloorF,
    Id,
    IfSet,
    Indicator,
    Mul,
    PairFn,
    PdfNormal,
    Proj1,
    Proj2,
    RestrictTo,
    Sub,
    compose as fn_compose,
    scale,
)
from sfkernel.kernels import (
    ConstK,
    Det,
    PMClosed,
    PMDensity,
    PMDirac,
    PMPiece,
    ParamK,
    ProdL,
    ProdR,
    PLAIN,
    ScoreK,
    SumK,
    ZERO_INFTY,
    ZeroK,
    abs_continuous,
    classify_kernel,
    compose,
    dense_to_kernel,
    eval_kernel,
    factorize_one_infty,
    kernel_to_dense,
    lift_over,
    mutually_singular,
    prod_l,
    prod_r,
    push,
    pull,
    score,
    sigma_finite_presentation,
    table_kernel,
)
from sfkernel.measures import (
    classify_measure,
    constant_repeat,
    counting_nat,
    dirac,
    lebesgue,
    measure_of,
    measures_agree,
    normal_measure,
    scale_measure,
    sum_measures,
    top_zero_infty_set,
    total_mass,
    uniform,
)
from sfkernel.oracle import (
    o_compose,
    o_identity,
    o_prod_l_kernel,
    o_prod_r_kernel,
    random_dense_kernel,
    random_dense_measure,
    random_space,
)
from sfkernel.sets import FullSet, interval, member, nat_set, real_atoms, rectangle
from sfkernel.spaces import Fin, NAT, Prod, REAL, UNIT, enumerate_points

RID = Id(REAL)
RR = Prod(REAL, REAL)


def test_det_kernel_evaluates_to_dirac():
    k = Det(FloorF(RID))
    mu = eval_kernel(k, 2.7)
    assert measure_of(mu, real_atoms([2])).value == 1
    assert total_mass(mu).value == 1


def test_det_partial_function_drops_mass():
    k = Det(Compose(RestrictTo(interval(0, Fraction(2, 5))), RID))
    mu = eval_kernel(k, 0.5)
    assert total_mass(mu).value == 0


def test_const_kernel():
    k = ConstK(REAL, uniform(0, 1))
    assert eval_kernel(k, 123.0) == uniform(0, 1)


def test_score_of_uniform_by_2y():
    g = scale(2, Proj2(RR))
    k = score(ConstK(REAL, uniform(0, 1)), g)
    mu = eval_kernel(k, 0.0)
    m = total_mass(mu, tol=1e-10)
    assert abs(float(m.value) - 1.0) < 1e-8


def test_score_by_one_is_identity():
    k0 = ConstK(REAL, uniform(0, 1))
    k = score(k0, ExtLit(RR, 1))
    assert measures_agree(eval_kernel(k, 0.0), eval_kernel(k0, 0.0))


def test_score_with_infinite_indicator():
    g = ExtMulFn(ExtLit(RR, INF), Indicator(rectangle(FullSet(REAL), interval(0, Fraction(1, 2)))))
    k = score(ConstK(REAL, uniform(0, 1)), g)
    mu = eval_kernel(k, 0.0)
    top = top_zero_infty_set(mu)
    assert member(top, Fraction(1, 4))
    assert not member(top, Fraction(3, 4))
    assert classify_kernel(k) == "SFinite"


def test_score_sigma_finite_with_finite_density_stays_sigma_finite():
    k = ConstK(REAL, lebesgue())
    g = Compose(
        IfSet(interval(0, 1), ExtLit(REAL, Fraction(1, 2)), ExtLit(REAL, 2)),
        Proj2(RR),
    )
    assert classify_kernel(score(k, g)) == "SigmaFinite"


def test_compose_with_identity_det():
    k = ConstK(REAL, uniform(0, 1))
    kid = compose(k, Det(RID))
    assert measures_agree(eval_kernel(kid, 0.0), eval_kernel(k, 0.0))


def test_det_compose_is_pullback():
    # delta_f ; k = f* k
    f = Const(REAL, "a", Fin(("a", "b")))
    target = table_kernel(
        Fin(("a", "b")), NAT, {"a": {0: ONE}, "b": {1: ONE}}
    )
    k = compose(Det(f), target)
    mu = eval_kernel(k, 5.0)
    assert measure_of(mu, nat_set({0})).value == 1


def test_push_lebesgue_along_floor():
    k = push(ConstK(UNIT, lebesgue(0, 10, True, False)), FloorF(RID))
    mu = eval_kernel(k, ())
    assert measure_of(mu, real_atoms([2])).value == 1


def test_push_dirac_outside_restriction_is_zero():
    k = push(
        ConstK(UNIT, dirac(Fraction(1, 2), REAL)),
        Compose(RestrictTo(interval(0, Fraction(2, 5))), RID),
    )
    assert total_mass(eval_kernel(k, ())).value == 0


def test_pull_reindexes():
    k = ParamK(
        REAL,
        (
            PMPiece(
                ONE,
                PMDirac(FloorF(RID)),
            ),
        ),
    )
    pulled = pull(scale(2, RID), k)
    mu = eval_kernel(pulled, 1.3)  # floor(2.6) = 2
    assert measure_of(mu, real_atoms([2])).value == 1


def test_prod_l_of_independent_uniforms():
    k = ConstK(UNIT, uniform(0, 1))
    l = ConstK(Prod(UNIT, REAL), uniform(0, 1))
    joint = prod_l(k, l)
    mu = eval_kernel(joint, ())
    r = measure_of(mu, rectangle(interval(0, Fraction(1, 2)), interval(0, Fraction(1, 2))))
    assert r.value == Fraction(1, 4)


def test_prod_r_matches_prod_l_for_independent():
    k = ConstK(UNIT, uniform(0, 1))
    l_r = ConstK(UNIT, uniform(2, 3))
    l_l = lift_over(l_r, REAL)
    a = eval_kernel(prod_l(k, l_l), ())
    b = eval_kernel(prod_r(k, l_r), ())
    probe = rectangle(interval(0, Fraction(1, 3)), interval(2, Fraction(5, 2)))
    assert measure_of(a, probe).value == measure_of(b, probe).value


def test_classification_closure():
    k = ConstK(REAL, uniform(0, 1))
    assert classify_kernel(k) == "Probability"
    assert classify_kernel(compose(k, Det(RID))) == "Probability"
    assert classify_kernel(score(k, ExtLit(RR, INF))) == "SFinite"
    assert classify_kernel(ZeroK(REAL, REAL)) == "Subprobability"
    assert classify_kernel(ConstK(REAL, lebesgue())) == "SigmaFinite"


def test_param_normal_kernel_is_probability():
    dens = PdfNormal(Proj2(RR), Proj1(RR), Const(RR, 1, REAL))
    k = ParamK(REAL, (PMPiece(ONE, PMDensity(FullSet(REAL), dens)),))
    assert classify_kernel(k) == "Probability"
    mu = eval_kernel(k, 1.5)
    m = total_mass(mu, tol=1e-9)
    assert abs(float(m.value) - 1.0) < 1e-7


def test_mutual_singularity_witness():
    a = ConstK(REAL, dirac(0, REAL))
    b = ConstK(REAL, uniform(1, 2))
    w = mutually_singular(a, b)
    assert w is not None
    assert member(w, (5.0, 0.0))
    assert not member(w, (5.0, 1.5))


def test_mutual_singularity_zero_kernel():
    a = ConstK(REAL, uniform(0, 1))
    z = ZeroK(REAL, REAL)
    assert mutually_singular(a, z) is not None


def test_no_witness_for_overlapping_densities():
    a = ConstK(REAL, normal_measure(0, 1))
    b = ConstK(REAL, uniform(0, 1))
    assert mutually_singular(a, b) is None


def test_abs_continuity_plain():
    assert abs_continuous(
        ConstK(REAL, normal_measure(0, 1)), ConstK(REAL, lebesgue()), PLAIN
    )
    assert not abs_continuous(
        ConstK(REAL, dirac(0, REAL)), ConstK(REAL, lebesgue()), PLAIN
    )


def test_abs_continuity_zero_infty_counterexample():
    nu = ConstK(REAL, constant_repeat(lebesgue()))
    nu_p = ConstK(REAL, normal_measure(0, 1))
    assert abs_continuous(nu_p, nu, PLAIN)
    assert not abs_continuous(nu_p, nu, ZERO_INFTY)


def test_abs_continuity_reflexive():
    k = ConstK(REAL, sum_measures([scale_measure(INF, dirac(0, REAL)), uniform(0, 1)]))
    assert abs_continuous(k, k, ZERO_INFTY)


def test_score_implies_zero_infty_abs_cont():
    k = ConstK(REAL, scale_measure(INF, dirac(0, REAL)))
    f = Compose(Indicator(interval(-1, 1)), Proj2(RR))
    assert abs_continuous(score(k, f), k, ZERO_INFTY)


def test_factorize_sigma_finite_is_trivial():
    k = ConstK(REAL, lebesgue())
    base, f = factorize_one_infty(k)
    assert base == k
    assert isinstance(f, ExtLit) and f.weight == ONE


def test_factorize_infinite_dirac():
    k = ConstK(REAL, scale_measure(INF, dirac(0, REAL)))
    base, f = factorize_one_infty(k)
    mu = eval_kernel(base, 0.0)
    assert total_mass(mu).value == 1
    assert classify_kernel(base) in ("Probability", "Subprobability", "Finite", "SigmaFinite")
    # f is inf exactly on the infinite region
    from sfkernel.funcs import eval_fn

    assert eval_fn(f, (9.0, 0)).is_inf
    assert eval_fn(f, (9.0, 3.0)) == ONE


def test_factorize_repeated_lebesgue():
    k = ConstK(REAL, constant_repeat(lebesgue()))
    base, f = factorize_one_infty(k)
    mu = eval_kernel(base, 0.0)
    assert measure_of(mu, interval(0, 1)).value == 1
    from sfkernel.funcs import eval_fn

    assert eval_fn(f, (0.0, 123.0)).is_inf


def test_factorize_score_roundtrip():
    k = ConstK(REAL, sum_measures([scale_measure(INF, dirac(0, REAL)), uniform(2, 3)]))
    base, f = factorize_one_infty(k)
    again = score(base, f)
    assert measures_agree(eval_kernel(again, 0.0), eval_kernel(k, 0.0))


def test_sigma_finite_presentation_finite_kernel():
    k = ConstK(REAL, uniform(0, 1))
    presented, proj = sigma_finite_presentation(k)
    mu = eval_kernel(presented, 0.0)
    # lives on slice {0} x Real
    r = measure_of(mu, rectangle(nat_set({0}), interval(0, 1)))
    assert abs(float(r.value) - 1.0) < 1e-9
    pushed = eval_kernel(push(presented, proj), 0.0)
    assert measures_agree(pushed, eval_kernel(k, 0.0))


def test_sigma_finite_presentation_two_pieces():
    k = ConstK(REAL, sum_measures([uniform(0, 1), uniform(2, 3)]))
    presented, proj = sigma_finite_presentation(k)
    mu = eval_kernel(presented, 0.0)
    r0 = measure_of(mu, rectangle(nat_set({0}), FullSet(REAL)))
    r1 = measure_of(mu, rectangle(nat_set({1}), FullSet(REAL)))
    assert float(r0.value) == pytest.approx(1.0, abs=1e-9)
    assert float(r1.value) == pytest.approx(1.0, abs=1e-9)
    assert classify_kernel(presented) == "SigmaFinite"


def test_sigma_finite_presentation_infinite_dirac():
    k = ConstK(REAL, scale_measure(INF, dirac(0, REAL)))
    presented, proj = sigma_finite_presentation(k)
    mu = eval_kernel(presented, 0.0)
    for i in range(3):
        r = measure_of(mu, rectangle(nat_set({i}), real_atoms([0])), tol=1e-6, max_terms=50)
        assert float(r.value) == pytest.approx(1.0, abs=1e-6)


# -- oracle agreement ---------------------------------------------------------


def test_compose_matches_oracle_matrix_product():
    rng = random.Random(11)
    for _ in range(25):
        X = random_space(rng, 4)
        Y = random_space(rng, 4)
        Z = random_space(rng, 4)
        dk = random_dense_kernel(rng, X, Y)
        dl = random_dense_kernel(rng, Y, Z)
        expected = o_compose(dk, dl)
        got = kernel_to_dense(compose(dense_to_kernel(dk), dense_to_kernel(dl)))
        assert got == expected


def test_identity_laws_against_oracle():
    rng = random.Random(5)
    for _ in range(10):
        X = random_space(rng, 4)
        dk = random_dense_kernel(rng, X, X)
        ident = o_identity(X)
        assert o_compose(dk, ident) == dk
        assert o_compose(ident, dk) == dk


def test_compose_associativity_oracle():
    rng = random.Random(23)
    for _ in range(10):
        X = random_space(rng, 3)
        k1 = random_dense_kernel(rng, X, X)
        k2 = random_dense_kernel(rng, X, X)
        k3 = random_dense_kernel(rng, X, X)
        assert o_compose(o_compose(k1, k2), k3) == o_compose(k1, o_compose(k2, k3))


def test_prod_l_equals_prod_r_on_finite_instances():
    rng = random.Random(42)
    for _ in range(25):
        X = random_space(rng, 3)
        Y = random_space(rng, 3)
        Z = random_space(rng, 3)
        dk = random_dense_kernel(rng, X, Y)
        dl = random_dense_kernel(rng, X, Z)
        # oracle: double sums in both orders
        l_map = {
            (x, y): dl.rows[x]
            for x in enumerate_points(X)
            for y in enumerate_points(Y)
        }
        left = o_prod_l_kernel(dk, l_map, Z)
        right = o_prod_r_kernel(dk, dl)
        assert left == right
        # main path agrees with the oracle
        k = dense_to_kernel(dk)
        l = dense_to_kernel(dl)
        got_r = kernel_to_dense(prod_r(k, l))
        assert got_r == right
        got_l = kernel_to_dense(prod_l(k, lift_over(l, Y)))
        assert got_l == left


def test_diagonal_counterexample_via_kernels():
    inf_leb = scale_measure(INF, lebesgue())
    k = ConstK(UNIT, inf_leb)
    l = ConstK(Prod(UNIT, REAL), inf_leb)
    joint = eval_kernel(prod_l(k, l), ())
    diag = fn_compose(Indicator(real_atoms([0])), Sub(Proj1(RR), Proj2(RR)))
    from sfkernel.measures import integrate

    r = integrate(joint, diag)
    assert r.value == ZERO and r.mode == "exact"

import math
import random
from fractions import Fraction

import pytest

from sfkernel.errors import (
    BoundViolation,
    ProgramSyntaxError,
    ScopeError,
    UnsampleableSite,
)
from sfkernel.extreal import INF, ONE, ZERO, ExtReal
from sfkernel.kernels import classify_kernel, eval_kernel
from sfkernel.measures import (
    beta_measure,
    counting_nat,
    measure_of,
    measures_agree,
    normal_measure,
    poisson_measure,
    total_mass,
    uniform,
)
from sfkernel.ppl import (
    DistSpec,
    ENum,
    EXACT_FINITE,
    PROBE,
    denote,
    equivalent,
    estimate,
    importance_transform,
    parse,
    program_type,
    rejection_sampler,
    run_sampler,
    sample_sites,
    swap_adjacent_lets,
    unparse,
)
from sfkernel.sets import interval, real_atoms
from sfkernel.spaces import BOTTOM, NAT, Prod, REAL


def test_parse_let_sample():
    t = parse("let x = sample(uniform 0 1) in x")
    assert program_type(t) == REAL


def test_parse_score_constant():
    t = parse("score(2.0); 0")
    assert program_type(t) == REAL


def test_scope_error():
    with pytest.raises(ScopeError):
        parse("let x = y in x")


def test_syntax_error_position():
    with pytest.raises(ProgramSyntaxError) as err:
        parse("let x = = in x")
    assert err.value.line == 1


def test_denote_sample_uniform():
    t = parse("sample(uniform 0 1)")
    k = denote(t)
    mu = eval_kernel(k, ())
    assert measure_of(mu, interval(0, Fraction(1, 2))).value == Fraction(1, 2)


def test_denote_score_mass():
    t = parse("score(3.0); 0")
    k = denote(t)
    mu = eval_kernel(k, ())
    assert total_mass(mu).value == 3


def test_denote_two_coin_table():
    src = (
        "let a = sample(bernoulli 0.5) in "
        "let b = sample(bernoulli 0.25) in a + b"
    )
    k = denote(parse(src))
    mu = eval_kernel(k, ())
    # P(sum = 0) = 1/2 * 3/4; P(1) = 1/2*1/4 + 1/2*3/4; P(2) = 1/2 * 1/4
    assert measure_of(mu, real_atoms([0])).value == Fraction(3, 8)
    assert measure_of(mu, real_atoms([1])).value == Fraction(1, 2)
    assert measure_of(mu, real_atoms([2])).value == Fraction(1, 8)


def test_denote_if_scores_branches():
    src = "let x = sample(bernoulli 0.25) in if x == 1 then 10 else 20"
    mu = eval_kernel(denote(parse(src)), ())
    assert measure_of(mu, real_atoms([10])).value == Fraction(1, 4)
    assert measure_of(mu, real_atoms([20])).value == Fraction(3, 4)


def test_denote_fail_is_zero():
    mu = eval_kernel(denote(parse("fail")), ())
    assert total_mass(mu).value == 0


def test_denote_pair():
    src = "(sample(bernoulli 0.5), sample(bernoulli 0.5))"
    mu = eval_kernel(denote(parse(src)), ())
    from sfkernel.sets import rectangle

    r = measure_of(mu, rectangle(real_atoms([1]), real_atoms([1])))
    assert r.value == Fraction(1, 4)


def test_denote_always_classifies():
    for src in [
        "sample(uniform 0 1)",
        "score(2.0); sample(bernoulli 0.5)",
        "let x = sample(normal 0 1) in x + 1",
        "sample(scale inf (dirac 0))",
    ]:
        k = denote(parse(src))
        assert classify_kernel(k) in (
            "Probability",
            "Subprobability",
            "Finite",
            "SigmaFinite",
            "SFinite",
        )


def test_param_dependent_normal_denotes():
    src = "let m = sample(uniform 0 1) in sample(normal m 1)"
    k = denote(parse(src))
    mu = eval_kernel(k, ())
    m = total_mass(mu, tol=1e-8)
    assert abs(float(m.value) - 1.0) < 1e-6


def test_unparse_roundtrip():
    src = (
        "let x = sample(uniform 0 1) in score(2 * x); "
        "if x <= 0.5 then (x, 0) else (x, 1)"
    )
    t = parse(src)
    t2 = parse(unparse(t))
    assert unparse(t) == unparse(t2)


def test_equivalent_reflexive():
    p = parse("let x = sample(bernoulli 0.5) in x")
    assert equivalent(p, p, EXACT_FINITE)


def test_equivalent_rejects_different_tables():
    p = parse("sample(bernoulli 0.5)")
    q = parse("sample(bernoulli 0.6)")
    assert not equivalent(p, q, EXACT_FINITE)


def test_let_commutativity():
    src = (
        "let a = sample(bernoulli 0.5) in "
        "let b = sample(bernoulli 0.25) in a - b"
    )
    p = parse(src)
    q = swap_adjacent_lets(p)
    assert equivalent(p, q, EXACT_FINITE)


def test_let_commutativity_with_scores():
    src = (
        "let a = sample(bernoulli 0.5) in "
        "let b = sample(bernoulli 0.75) in score(1 + a + b); (a, b)"
    )
    p = parse(src)
    q = swap_adjacent_lets(p)
    assert equivalent(p, q, EXACT_FINITE)


def test_importance_transform_identity_proposal():
    p = parse("sample(uniform 0 1)")
    q = importance_transform(p, 0, DistSpec("uniform", (ENum(0), ENum(1))))
    assert equivalent(p, q, PROBE, tol=1e-6)
    text = unparse(q)
    assert "score" in text and "dsl{" in text


def test_importance_transform_discrete_exact():
    p = parse("sample(bernoulli 0.5)")
    q = importance_transform(p, 0, DistSpec("bernoulli", (ENum(Fraction(1, 4)),)))
    assert equivalent(p, q, EXACT_FINITE)


def test_importance_transform_counting_via_poisson():
    p = parse("sample(counting-nat)")
    q = importance_transform(p, 0, DistSpec("poisson", (ENum(1),)))
    sites = sample_sites(q)
    assert sites and sites[0].dist.name == "poisson"
    # weights are 1/pmf(n): check the scored denotation at a few atoms
    from sfkernel.sets import nat_set

    mu_q = eval_kernel(denote(q), ())
    for n in range(4):
        got = measure_of(mu_q, nat_set({n}), tol=1e-9).value
        assert float(got) == pytest.approx(1.0, rel=1e-7)


def test_importance_transform_normal_proposal():
    p = parse("sample(normal 0 1)")
    q = importance_transform(p, 0, DistSpec("normal", (ENum(1), ENum(1))))
    mu_p = eval_kernel(denote(p), ())
    mu_q = eval_kernel(denote(q), ())
    for t in [-1.0, 0.0, 0.5, 1.0, 2.0]:
        a = measure_of(mu_p, interval(-5, t), tol=1e-9)
        b = measure_of(mu_q, interval(-5, t), tol=1e-9)
        assert abs(float(a.value) - float(b.value)) < 1e-6


def test_run_sampler_bernoulli_mean():
    t = parse("sample(bernoulli 0.5)")
    samples = run_sampler(t, seed=11, n=10**4)
    mean = estimate(samples)
    assert abs(mean - 0.5) < 0.02


def test_run_sampler_score_weights():
    t = parse("score(2.0); sample(bernoulli 0.5)")
    samples = run_sampler(t, seed=3, n=100)
    assert all(s.weight == 2 for s in samples)


def test_run_sampler_rejects_unsampleable():
    t = parse("sample(lebesgue)")
    with pytest.raises(UnsampleableSite):
        run_sampler(t, seed=0, n=2)


def test_run_sampler_beta_bernoulli_posterior():
    # prior Beta(2,3); observe one success (score theta); posterior Beta(3,3)
    src = "let t = sample(beta-density 2 3) in score(t); t"
    samples = run_sampler(parse(src), seed=19, n=4000)
    mean = estimate(samples)
    assert abs(mean - 0.5) < 0.02  # Beta(3,3) mean


def test_run_sampler_fail_yields_bottom():
    t = parse("fail")
    samples = run_sampler(t, seed=0, n=5)
    assert all(s.value is BOTTOM for s in samples)


def test_rejection_sampler_beta_shape():
    dens = beta_measure(2, 2)
    prop = uniform(0, 1)
    accepted = rejection_sampler(dens, prop, bound=1.5, seed=5, n=10**4)
    rate = len(accepted) / 10**4
    assert abs(rate - 2 / 3) < 0.02
    # KS statistic against the Beta(2,2) CDF 3t^2 - 2t^3
    xs = sorted(float(x) for x in accepted)
    ks = 0.0
    n = len(xs)
    for i, x in enumerate(xs):
        cdf = 3 * x * x - 2 * x**3
        ks = max(ks, abs((i + 1) / n - cdf), abs(i / n - cdf))
    assert ks < 0.02


def test_rejection_sampler_identity():
    mu = uniform(0, 1)
    accepted = rejection_sampler(mu, mu, bound=1, seed=9, n=200)
    assert len(accepted) == 200


def test_rejection_sampler_bound_violation():
    dens = beta_measure(2, 2)
    prop = uniform(0, 1)
    with pytest.raises(BoundViolation):
        rejection_sampler(dens, prop, bound=0.5, seed=5, n=100)

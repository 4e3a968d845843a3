import math
import random
from fractions import Fraction

import pytest

from sfkernel.calculus import (
    Disintegration,
    LebesgueParts,
    RnResult,
    disintegrate,
    lebesgue_decompose,
    measure_rn_derivative,
    rn_derivative,
    rn_equal,
)
from sfkernel.errors import (
    InftyCompatibilityFailed,
    NotAbsCont,
    NotZeroInftyAbsCont,
    Unsupported,
)
from sfkernel.extreal import INF, ONE, ZERO, ExtReal, rn_div
from sfkernel.funcs import (
    Compose,
    Const,
    ExtLit,
    Id,
    IfSet,
    Indicator,
    Mul,
    PairFn,
    Proj1,
    Proj2,
    Sub,
    eval_fn,
    scale,
)
from sfkernel.kernels import (
    ConstK,
    Det,
    ScoreK,
    ZeroK,
    dense_to_kernel,
    eval_kernel,
    kernel_to_dense,
    push,
    score,
    table_kernel,
)
from sfkernel.measures import (
    DiracB,
    Weighted,
    beta_measure,
    constant_repeat,
    counting_nat,
    dirac,
    integrate,
    lebesgue,
    measure_of,
    measures_agree,
    normal_measure,
    poisson_measure,
    prod_measure,
    scale_measure,
    singleton_set,
    sum_measures,
    total_mass,
    uniform,
)
from sfkernel.oracle import (
    DenseMeasure,
    o_decompose,
    o_disintegrate,
    o_rn,
    o_score,
    random_dense_measure,
    random_space,
    random_weight,
)
from sfkernel.sets import FullSet, fin_set, interval, member, rectangle, real_atoms
from sfkernel.spaces import Fin, NAT, Prod, REAL, UNIT, enumerate_points

RID = Id(REAL)


def _dense_to_measure(dm):
    parts = [
        Weighted(w, DiracB(p, dm.space))
        for p, w in dm.weights.items()
        if not w.is_zero
    ]
    from sfkernel.measures import sum_measures

    return sum_measures(parts, dm.space)


def _measure_to_dense(mu, space):
    return DenseMeasure(
        space,
        {p: measure_of(mu, singleton_set(p, space)).value for p in enumerate_points(space)},
    )


# -- Radon-Nikodym ------------------------------------------------------------


def test_rn_self_derivative_is_one_ae():
    nu = ConstK(REAL, sum_measures([uniform(0, 1), dirac(3, REAL)]))
    res = rn_derivative(nu, nu)
    assert eval_fn(res.derivative, (0.0, 3)) == ONE
    assert eval_fn(res.derivative, (0.0, 0.5)) == ONE


def test_rn_counterexample_normal_vs_repeated_lebesgue():
    nu = ConstK(REAL, constant_repeat(lebesgue()))
    nu_p = ConstK(REAL, normal_measure(0, 1))
    with pytest.raises(NotZeroInftyAbsCont):
        rn_derivative(nu_p, nu)


def test_rn_scored_kernel_returns_score():
    nu = ConstK(REAL, uniform(0, 1))
    f = scale(2, Proj2(Prod(REAL, REAL)))
    nu_p = score(nu, f)
    res = rn_derivative(nu_p, nu)
    assert res.derivative == f


def test_rn_discrete_oracle_agreement():
    rng = random.Random(101)
    for _ in range(40):
        space = random_space(rng, 5)
        nu_d = random_dense_measure(rng, space)
        # build nu' = nu . f with pointwise weights so <<_inf holds
        f = {p: random_weight(rng) for p in enumerate_points(space)}
        nup_d = o_score(nu_d, f)
        mu_p = _dense_to_measure(nup_d)
        mu = _dense_to_measure(nu_d)
        expected = o_rn(nup_d, nu_d)
        d = measure_rn_derivative(mu_p, mu)
        for p in enumerate_points(space):
            got = eval_fn(d, p)
            if nu_d.weights[p].is_zero:
                continue  # almost-everywhere freedom off the support
            assert got == expected[p]
        # roundtrip: score(nu, d) re-denotes nu'
        from sfkernel.kernels import score_measure

        again = score_measure(mu, d)
        assert _measure_to_dense(again, space) == nup_d


def test_rn_roundtrip_continuous():
    nu = ConstK(REAL, uniform(0, 1))
    dens = scale(6, Mul(Proj2(Prod(REAL, REAL)), Sub(Const(Prod(REAL, REAL), 1, REAL), Proj2(Prod(REAL, REAL)))))
    nu_p = score(nu, dens)
    res = rn_derivative(nu_p, nu)
    mu_p = eval_kernel(nu_p, 0.0)
    from sfkernel.kernels import score_measure
    from sfkernel.funcs import partial_left

    again = score_measure(eval_kernel(nu, 0.0), partial_left(res.derivative, 0.0))
    for t in [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)]:
        a = measure_of(again, interval(0, t), tol=1e-10)
        b = measure_of(mu_p, interval(0, t), tol=1e-10)
        assert abs(float(a.value) - float(b.value)) < 1e-8


def test_rn_density_over_density():
    mu = ConstK(REAL, normal_measure(0, 1))
    nu = ConstK(REAL, lebesgue())
    res = rn_derivative(mu, nu)
    v = eval_fn(res.derivative, (0.0, 0.0))
    assert abs(float(v) - 1 / math.sqrt(2 * math.pi)) < 1e-12


def test_rn_atoms_with_infinite_weights():
    mu = ConstK(REAL, sum_measures([scale_measure(INF, dirac(0, REAL)), dirac(1, REAL)]))
    nu = ConstK(REAL, sum_measures([scale_measure(INF, dirac(0, REAL)), scale_measure(2, dirac(1, REAL))]))
    res = rn_derivative(mu, nu)
    assert eval_fn(res.derivative, (0.0, 0)) == ONE  # inf/inf, canonical 1
    assert eval_fn(res.derivative, (0.0, 1)) == Fraction(1, 2)


def test_rn_counting_vs_poisson():
    nu = ConstK(UNIT, poisson_measure(1.0))
    mu = ConstK(UNIT, counting_nat())
    res = rn_derivative(mu, nu)
    # derivative at n is 1/pmf(n) = e * n!
    for n in range(4):
        got = float(eval_fn(res.derivative, ((), n)))
        expected = math.exp(1) * math.factorial(n)
        assert got == pytest.approx(expected, rel=1e-9)


# -- uniqueness criterion ------------------------------------------------------


def test_rn_equal_reflexive():
    f = ExtLit(REAL, 2)
    nu = uniform(0, 1)
    assert rn_equal(f, f, nu)


def test_rn_equal_on_infinity_region():
    nu = scale_measure(INF, uniform(0, 1))
    f = ExtLit(REAL, 1)
    g = ExtLit(REAL, 2)
    # both give inf against the 0-inf region; criterion value is 0
    assert rn_equal(f, g, nu)


def test_rn_not_equal_on_finite_atom():
    nu = dirac(0, REAL)
    f = ExtLit(REAL, 1)
    g = ExtLit(REAL, 2)
    assert not rn_equal(f, g, nu)


def test_rn_equal_zero_vs_positive_on_infinity_region():
    nu = scale_measure(INF, uniform(0, 1))
    f = ExtLit(REAL, 0)
    g = ExtLit(REAL, 2)
    assert not rn_equal(f, g, nu)


def test_rn_equal_validates_exactly_redenoting_derivatives():
    # exhaustive over a small lattice on a 3-point space
    space = Fin(("a", "b", "c"))
    vals = [ZERO, ONE, ExtReal(2), INF]
    nu_d = DenseMeasure(space, {"a": ONE, "b": INF, "c": ZERO})
    nu = _dense_to_measure(nu_d)
    base = {p: v for p, v in zip(("a", "b", "c"), (ONE, ONE, ZERO))}
    nup_d = o_score(nu_d, base)

    def as_fn(table):
        fn = ExtLit(space, ZERO)
        for p, v in table.items():
            fn = IfSet(fin_set(space, {p}), ExtLit(space, v), fn)
        return fn

    f_fn = as_fn(base)
    for va in vals:
        for vb in vals:
            for vc in vals:
                g = {"a": va, "b": vb, "c": vc}
                g_fn = as_fn(g)
                redenotes = o_score(nu_d, g) == nup_d
                assert rn_equal(f_fn, g_fn, nu) == redenotes, (g, redenotes)


# -- Lebesgue decomposition ----------------------------------------------------


def test_decompose_self_is_absolutely_continuous():
    k = ConstK(REAL, uniform(0, 1))
    parts = lebesgue_decompose(k, k)
    assert isinstance(parts.k_infty, ZeroK)
    assert isinstance(parts.k_s, ZeroK)
    assert measures_agree(eval_kernel(parts.k_a, 0.0), uniform(0, 1))


def test_decompose_three_part_continuous_example():
    l = ConstK(REAL, sum_measures([scale_measure(INF, uniform(0, 1)), uniform(2, 3)]))
    k = ConstK(
        REAL,
        sum_measures([uniform(0, 1), uniform(2, 3), dirac(5, REAL)]),
    )
    parts = lebesgue_decompose(k, l)
    assert measures_agree(eval_kernel(parts.k_a, 0.0), uniform(2, 3))
    assert measures_agree(eval_kernel(parts.k_infty, 0.0), uniform(0, 1))
    assert measures_agree(eval_kernel(parts.k_s, 0.0), dirac(5, REAL))
    # the three defining relations, checked by the module's own predicates
    from sfkernel.kernels import abs_continuous, mutually_singular, ZERO_INFTY

    assert abs_continuous(parts.k_a, l, ZERO_INFTY)
    assert mutually_singular(parts.k_s, l) is not None
    # k_infty lives inside l's 0-inf region and is itself sigma-finite
    from sfkernel.kernels import classify_kernel

    assert classify_kernel(parts.k_infty) in ("Probability", "Subprobability", "Finite", "SigmaFinite")
    assert member(parts.witness_infty, (0.0, 0.5))
    # parts re-sum to k
    total = sum_measures(
        [eval_kernel(parts.k_a, 0.0), eval_kernel(parts.k_infty, 0.0), eval_kernel(parts.k_s, 0.0)],
        REAL,
    )
    assert measures_agree(total, eval_kernel(k, 0.0))


def test_decompose_infinite_against_finite():
    k = ConstK(REAL, scale_measure(INF, uniform(0, 1)))
    l = ConstK(REAL, uniform(0, 1))
    parts = lebesgue_decompose(k, l)
    assert isinstance(parts.k_infty, ZeroK)
    assert isinstance(parts.k_s, ZeroK)
    top = eval_kernel(parts.k_a, 0.0)
    assert measure_of(top, interval(0, Fraction(1, 2))).value.is_inf


def test_decompose_matches_oracle():
    rng = random.Random(77)
    for _ in range(60):
        space = random_space(rng, 5)
        kd = random_dense_measure(rng, space)
        ld = random_dense_measure(rng, space)
        ka, kinf, ks = o_decompose(kd, ld)
        parts = lebesgue_decompose(
            ConstK(UNIT, _dense_to_measure(kd)), ConstK(UNIT, _dense_to_measure(ld))
        )
        assert _measure_to_dense(eval_kernel(parts.k_a, ()), space) == ka
        assert _measure_to_dense(eval_kernel(parts.k_infty, ()), space) == kinf
        assert _measure_to_dense(eval_kernel(parts.k_s, ()), space) == ks


def test_decompose_representation_stability():
    rng = random.Random(31)
    for _ in range(10):
        space = random_space(rng, 4)
        kd = random_dense_measure(rng, space)
        ld = random_dense_measure(rng, space)
        mu_k = _dense_to_measure(kd)
        mu_l = _dense_to_measure(ld)
        parts1 = lebesgue_decompose(ConstK(UNIT, mu_k), ConstK(UNIT, mu_l))
        # re-present k: split each piece in half (when finite)
        halves = []
        for p, w in kd.weights.items():
            if w.is_zero:
                continue
            if w.is_inf:
                halves.append(Weighted(w, DiracB(p, space)))
            else:
                halves.append(Weighted(w.v / 2, DiracB(p, space)))
                halves.append(Weighted(w.v / 2, DiracB(p, space)))
        mu_k2 = sum_measures(halves, space)
        parts2 = lebesgue_decompose(ConstK(UNIT, mu_k2), ConstK(UNIT, mu_l))
        for a, b in [
            (parts1.k_a, parts2.k_a),
            (parts1.k_infty, parts2.k_infty),
            (parts1.k_s, parts2.k_s),
        ]:
            da = _measure_to_dense(eval_kernel(a, ()), space) if not isinstance(a, ZeroK) else None
            db = _measure_to_dense(eval_kernel(b, ()), space) if not isinstance(b, ZeroK) else None
            if da is None or db is None:
                assert (da is None or da.mass().is_zero) and (db is None or db.mass().is_zero)
            else:
                assert da == db


# -- disintegration -------------------------------------------------------------


def test_disintegrate_finite_bayes_table():
    X = Fin(("x0", "x1"))
    T = Fin(("t0", "t1"))
    XT = Prod(X, T)
    joint_w = {
        ("x0", "t0"): ONE,
        ("x0", "t1"): ONE,
        ("x1", "t0"): ExtReal(2),
        ("x1", "t1"): ZERO,
    }
    joint = sum_measures(
        [Weighted(w, DiracB(p, XT)) for p, w in joint_w.items() if not w.is_zero],
        XT,
    )
    mu = ConstK(UNIT, joint)
    phi = Proj1(XT)
    nu = push(mu, phi)
    dis = disintegrate(mu, nu, phi)
    row0 = eval_kernel(dis.kernel, ((), "x0"))
    assert measure_of(row0, singleton_set(("x0", "t0"), XT)).value == Fraction(1, 2)
    assert measure_of(row0, singleton_set(("x0", "t1"), XT)).value == Fraction(1, 2)
    row1 = eval_kernel(dis.kernel, ((), "x1"))
    assert measure_of(row1, singleton_set(("x1", "t0"), XT)).value == 1
    # property (a): integral nu(dy) k(y, A) = mu(A)
    for p in enumerate_points(XT):
        acc = ZERO
        for x in enumerate_points(X):
            m_x = measure_of(eval_kernel(nu, ()), singleton_set(x, X)).value
            k_val = measure_of(
                eval_kernel(dis.kernel, ((), x)), singleton_set(p, XT)
            ).value
            from sfkernel.extreal import ext_mul

            acc = acc + ext_mul(m_x, k_val)
        assert acc == measure_of(joint, singleton_set(p, XT)).value


def test_disintegrate_matches_oracle_tables():
    rng = random.Random(55)
    for _ in range(30):
        X = random_space(rng, 3)
        T = Fin(tuple(f"t{i}" for i in range(rng.randint(1, 3))))
        XT = Prod(X, T)
        dm = DenseMeasure(
            XT,
            {
                p: rng.choice([ZERO, ONE, ExtReal(2), ExtReal(Fraction(1, 2))])
                for p in enumerate_points(XT)
            },
        )
        joint = _dense_to_measure(dm)
        if isinstance(joint, type(None)):
            continue
        mu = ConstK(UNIT, joint)
        phi = Proj1(XT)
        nu = push(mu, phi)
        dis = disintegrate(mu, nu, phi)
        table, flagged = o_disintegrate(dm, X, T)
        for x in enumerate_points(X):
            if x in flagged:
                continue
            row = eval_kernel(dis.kernel, ((), x))
            for t in enumerate_points(T):
                got = measure_of(row, singleton_set((x, t), XT)).value
                assert got == table.rows[x].weights[t]


def test_disintegrate_infty_compat_failure():
    mu = ConstK(UNIT, lebesgue())
    bang = Const(REAL, (), UNIT)
    nu = push(mu, bang)  # inf . dirac ()
    with pytest.raises(InftyCompatibilityFailed):
        disintegrate(mu, nu, bang)


def test_disintegrate_beta_binomial_posterior():
    # joint over (count in 0..5) x theta with Beta(2,3) prior
    C = Fin(tuple(f"c{k}" for k in range(6)))
    a, b, n = 2, 3, 5
    XT = Prod(C, REAL)
    theta = Id(REAL)
    prior = beta_measure(a, b)

    def binom_term(k):
        coeff = math.comb(n, k)
        fn = Const(REAL, coeff, REAL)
        from sfkernel.funcs import fn_pow

        one_minus = Sub(Const(REAL, 1, REAL), theta)
        return Mul(fn, Mul(fn_pow(theta, k) if k else Const(REAL, 1, REAL),
                           fn_pow(one_minus, n - k) if n - k else Const(REAL, 1, REAL)))

    from sfkernel.measures import LebesgueDensity, density_measure
    from sfkernel.funcs import ExtMulFn, PdfBeta

    prior_dens = PdfBeta(theta, Const(REAL, a, REAL), Const(REAL, b, REAL))
    pieces = []
    for k in range(6):
        dens = ExtMulFn(prior_dens, binom_term(k))
        slice_k = density_measure(interval(0, 1), dens)
        from sfkernel.kernels import _embed_left

        pieces.append(_embed_left(f"c{k}", C, slice_k))
    joint = sum_measures(pieces, XT)
    mu = ConstK(UNIT, joint)
    phi = Proj1(XT)
    nu = push(mu, phi)
    dis = disintegrate(mu, nu, phi)
    row = eval_kernel(dis.kernel, ((), "c2"))
    # posterior after k=2 of n=5 is Beta(a+2, b+3); compare densities on a grid
    from sfkernel.funcs import partial_left

    post_a, post_b = a + 2, b + 3
    norm = math.gamma(post_a + post_b) / (math.gamma(post_a) * math.gamma(post_b))
    # extract the conditional density by measuring small windows
    for i in range(1, 10):
        t = i / 10
        w = Fraction(1, 1000)
        got = float(
            measure_of(row, rectangle(singleton_set("c2", C), interval(t - float(w) / 2, t + float(w) / 2)), tol=1e-10).value
        ) / float(w)
        expected = norm * t ** (post_a - 1) * (1 - t) ** (post_b - 1)
        assert got == pytest.approx(expected, rel=2e-4, abs=2e-4)


def test_rn_as_disintegration_with_identity():
    space = Fin(("a", "b"))
    mu_d = DenseMeasure(space, {"a": ExtReal(Fraction(1, 2)), "b": ExtReal(Fraction(3, 2))})
    nu_d = DenseMeasure(space, {"a": ONE, "b": ONE})
    mu = ConstK(UNIT, _dense_to_measure(mu_d))
    nu = ConstK(UNIT, _dense_to_measure(nu_d))
    dis = disintegrate(mu, nu, Id(space))
    rn = o_rn(mu_d, nu_d)
    for p in enumerate_points(space):
        row = eval_kernel(dis.kernel, ((), p))
        assert measure_of(row, singleton_set(p, space)).value == rn[p]

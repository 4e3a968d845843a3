import itertools
import math
from fractions import Fraction

import pytest

from sfkernel.extreal import INF, ONE, ZERO, ExtReal
from sfkernel.funcs import (
    Const,
    ExtLit,
    ExtMulFn,
    Id,
    IfSet,
    Indicator,
    Mul,
    Sub,
    compose,
    scale,
)
from sfkernel.measures import (
    EXACT,
    DIVERGES,
    TRUNCATED,
    CountingNat,
    DiracB,
    FiniteSum,
    LebesgueDensity,
    ProductBase,
    SeqSum,
    Weighted,
    ZeroMeasure,
    as_subprob_sum,
    beta_measure,
    canonical_probes,
    classify_measure,
    constant_repeat,
    counting_nat,
    density_measure,
    dirac,
    disjoint_windows,
    finitely_approximable,
    geometric_weights,
    integrate,
    lebesgue,
    lebesgue_on,
    measure_of,
    normal_measure,
    normalize,
    poisson_measure,
    prod_measure,
    scale_measure,
    sum_measures,
    top_zero_infty_set,
    total_mass,
    uniform,
)
from sfkernel.sets import (
    EmptySet,
    FullSet,
    fin_set,
    interval,
    member,
    nat_set,
    real_atoms,
    rectangle,
)
from sfkernel.spaces import Fin, NAT, Prod, REAL


RID = Id(REAL)


def test_lebesgue_interval_mass():
    r = measure_of(lebesgue(), interval(2, 5))
    assert r.mode == EXACT and r.value == 3


def test_infinite_atom_plus_dirac():
    mu = sum_measures([scale_measure(INF, dirac(1, REAL)), dirac(0, REAL)])
    r = measure_of(mu, real_atoms([1]))
    assert r.mode == EXACT and r.value.is_inf


def test_divergence_of_repeated_lebesgue():
    mu = SeqSum(REAL, lambda n: lebesgue(), lambda n: INF)
    r = measure_of(mu, interval(0, 1), tol=1e-3)
    assert r.mode == DIVERGES
    # a 10-term hand sum of unit masses keeps growing linearly
    assert sum(1 for _ in range(10)) == 10


def test_uniform_mass_and_classification():
    u = uniform(0, 1)
    assert total_mass(u).value == 1
    assert classify_measure(u) == "Probability"


def test_integrate_identity_against_uniform():
    r = integrate(uniform(0, 1), RID, tol=1e-10)
    assert abs(float(r.value) - 0.5) <= 1e-8


def test_integrate_dirac_is_evaluation():
    f = Mul(RID, RID)
    r = integrate(dirac(3, REAL), f)
    assert r.mode == EXACT and r.value == 9


def test_integrate_indicator_equals_measure():
    A = interval(Fraction(1, 4), Fraction(3, 4))
    mu = uniform(0, 1)
    assert integrate(mu, Indicator(A)).value == measure_of(mu, A).value == Fraction(1, 2)


def test_scott_monotone_on_nested_sets():
    mu = sum_measures([uniform(0, 1), scale_measure(2, dirac(Fraction(1, 2), REAL))])
    vals = []
    for k in range(1, 5):
        A = interval(0, Fraction(k, 4))
        vals.append(float(measure_of(mu, A).value))
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))


def test_linearity_exact():
    a = uniform(0, 1)
    b = scale_measure(Fraction(3, 2), dirac(Fraction(1, 2), REAL))
    A = interval(0, Fraction(1, 2))
    lhs = measure_of(sum_measures([a, b]), A).value
    rhs = measure_of(a, A).value + measure_of(b, A).value
    assert lhs == rhs


def test_product_base_rectangle():
    mu = prod_measure(lebesgue(0, 1, True, True), lebesgue(0, 1))
    r = measure_of(mu, rectangle(interval(0, Fraction(1, 2)), interval(0, Fraction(1, 2))))
    assert r.mode == EXACT and r.value == Fraction(1, 4)


def test_diagonal_indicator_of_infinite_plane_is_zero():
    # the product non-uniqueness counterexample, on the iterated side
    inf_leb = scale_measure(INF, lebesgue())
    plane = prod_measure(inf_leb, inf_leb)
    diag = compose(Indicator(real_atoms([0])), Sub(*_projs()))
    r = integrate(plane, diag)
    assert r.value == ZERO
    assert r.mode == EXACT


def _projs():
    from sfkernel.funcs import Proj1, Proj2

    sp = Prod(REAL, REAL)
    return Proj1(sp), Proj2(sp)


def test_as_subprob_sum_greedy_split():
    mu = scale_measure(Fraction(5, 2), uniform(0, 1))
    pieces = list(itertools.islice(as_subprob_sum(mu), 10))
    masses = [total_mass(p).value for p in pieces]
    assert masses == [1, 1, Fraction(1, 2)]


def test_as_subprob_sum_already_subprob():
    mu = scale_measure(Fraction(1, 3), uniform(0, 1))
    pieces = list(as_subprob_sum(mu))
    assert len(pieces) == 1


def test_as_subprob_sum_infinite_dirac():
    mu = scale_measure(INF, dirac(0, REAL))
    pieces = list(itertools.islice(as_subprob_sum(mu), 5))
    assert len(pieces) == 5
    for p in pieces:
        assert total_mass(p).value == 1
        assert measure_of(p, real_atoms([0])).value == 1


def test_as_subprob_partial_sums_converge():
    mu = sum_measures([uniform(0, 1), scale_measure(Fraction(7, 4), dirac(2, REAL))])
    target = float(total_mass(mu).value)
    acc = 0.0
    for p in itertools.islice(as_subprob_sum(mu), 20):
        acc += float(total_mass(p).value)
    assert abs(acc - target) < 1e-9


def test_top_set_of_infinite_dirac_plus_uniform():
    mu = sum_measures([scale_measure(INF, dirac(0, REAL)), uniform(0, 1)])
    top = top_zero_infty_set(mu)
    assert member(top, 0)
    assert not member(top, Fraction(1, 2))


def test_top_set_sigma_finite_is_empty():
    assert isinstance(top_zero_infty_set(lebesgue()), EmptySet)


def test_top_set_infinite_uniform():
    mu = scale_measure(INF, uniform(0, 1))
    top = top_zero_infty_set(mu)
    assert member(top, Fraction(1, 2)) and member(top, 0)
    assert not member(top, 2)


def test_top_set_excludes_finitely_charged_atom():
    mu = sum_measures(
        [scale_measure(INF, uniform(0, 1)), dirac(Fraction(1, 2), REAL)]
    )
    top = top_zero_infty_set(mu)
    assert not member(top, Fraction(1, 2))
    assert member(top, Fraction(1, 4))


def test_classify_chain():
    assert classify_measure(uniform(0, 1)) == "Probability"
    assert classify_measure(scale_measure(Fraction(1, 2), uniform(0, 1))) == "Subprobability"
    assert classify_measure(scale_measure(3, uniform(0, 1))) == "Finite"
    assert classify_measure(lebesgue()) == "SigmaFinite"
    assert classify_measure(scale_measure(INF, dirac(0, REAL))) == "SFinite"


def test_classify_windows_presentation_of_lebesgue():
    def gen(n):
        half, idx = divmod(n, 2)
        if idx == 0:
            return lebesgue(half, half + 1, True, False)
        return lebesgue(-half - 1, -half, True, False)

    mu = disjoint_windows(REAL, gen)
    assert classify_measure(mu) == "SigmaFinite"


def test_classify_constant_repeat_is_sfinite():
    mu = constant_repeat(lebesgue())
    assert classify_measure(mu) == "SFinite"
    top = top_zero_infty_set(mu)
    assert member(top, 1000.0)


def test_geometric_weights_normalize_to_scalar():
    mu = geometric_weights(Fraction(1, 2), uniform(0, 1))
    nf = normalize(mu)
    assert len(nf.pieces) == 1
    w, _ = nf.pieces[0]
    assert w == 2


def test_finitely_approximable():
    assert finitely_approximable(lebesgue(), FullSet(REAL))
    inf_dirac = scale_measure(INF, dirac(0, REAL))
    assert not finitely_approximable(inf_dirac, real_atoms([0]))
    assert finitely_approximable(inf_dirac, interval(1, 2))


def test_counting_nat_measure():
    mu = counting_nat()
    assert measure_of(mu, nat_set({1, 2, 3})).value == 3
    assert measure_of(mu, nat_set({0}, cofinite=True)).value.is_inf


def test_poisson_measure_mass_and_atoms():
    mu = poisson_measure(1.0)
    assert abs(float(measure_of(mu, nat_set({0})).value) - math.exp(-1)) < 1e-12
    m = total_mass(mu, tol=1e-9)
    assert abs(float(m.value) - 1.0) < 1e-6
    assert classify_measure(mu) == "Probability"


def test_normal_measure_mass():
    m = total_mass(normal_measure(0, 1), tol=1e-10)
    assert abs(float(m.value) - 1.0) < 1e-8
    assert classify_measure(normal_measure(0, 1)) == "Probability"


def test_beta_density_example():
    dens = scale(6, Mul(RID, Sub(Const(REAL, 1, REAL), RID)))
    mu = density_measure(interval(0, 1), dens)
    m = total_mass(mu, tol=1e-10)
    assert abs(float(m.value) - 1.0) < 1e-8


def test_scored_infinite_density_measure():
    # density with an infinite region is carried in weights after
    # normalisation, so measure evaluation stays exact
    dens = IfSet(interval(0, Fraction(1, 2)), ExtLit(REAL, INF), ExtLit(REAL, 1))
    mu = density_measure(interval(0, 1), dens)
    assert measure_of(mu, interval(0, Fraction(1, 4))).value.is_inf
    assert measure_of(mu, interval(Fraction(3, 4), 1)).value == Fraction(1, 4)
    top = top_zero_infty_set(mu)
    assert member(top, Fraction(1, 4)) and not member(top, Fraction(3, 4))


def test_truncated_geometric_evaluation():
    mu = geometric_weights(Fraction(1, 2), dirac(0, REAL))
    r = measure_of(mu, real_atoms([0]), tol=1e-6)
    assert r.mode in (EXACT, TRUNCATED)
    assert abs(float(r.value) - 2.0) < 1e-5


def test_zero_measure():
    z = ZeroMeasure(REAL)
    assert measure_of(z, FullSet(REAL)).value == 0
    assert classify_measure(z) == "Subprobability"


def test_canonical_probes_cover_space():
    probes = canonical_probes(REAL)
    assert any(isinstance(p, FullSet) for p in probes)
    probes_n = canonical_probes(NAT)
    assert any(getattr(p, "cofinite", False) for p in probes_n if hasattr(p, "cofinite"))

import math
import random
from fractions import Fraction

import pytest

from sfkernel.errors import FiniteTotalMass, NotProbability, Unsupported
from sfkernel.extreal import INF, ONE, ZERO, ExtReal
from sfkernel.funcs import Const, Id, eval_fn, preimage
from sfkernel.kernels import ConstK, classify_kernel, push, Det, PushK
from sfkernel.measures import (
    counting_nat,
    dirac,
    lebesgue,
    measure_of,
    normal_measure,
    poisson_measure,
    scale_measure,
    singleton_set,
    sum_measures,
    total_mass,
    uniform,
)
from sfkernel.oracle import DenseMeasure
from sfkernel.randomise import (
    HALFLINE,
    NATUNIT,
    REALLINE,
    UNIT01,
    InvCdfNat,
    InvCdfReal,
    NatIndexed,
    Randomiser,
    atom_sort_key,
    derived_seed,
    fn_iso_halfline_to_real,
    fn_iso_real_to_halfline,
    iso_halfline_to_nat_unit,
    iso_halfline_to_real,
    iso_nat_unit_to_halfline,
    iso_real_image_interval,
    iso_real_preimage_interval,
    iso_real_to_halfline,
    randomise_prob,
    randomise_sfinite,
    randomise_subprob,
    sample_via,
    shell_radius,
    source_measure,
    total_randomise,
)
from sfkernel.sets import FullSet, interval, lebesgue_length, member, real_atoms
from sfkernel.spaces import BOTTOM, Fin, NAT, Prod, REAL, UNIT


def _det_r(rand):
    # unwrap the input-projection composition for direct preimage work
    from sfkernel.funcs import Compose, Proj2

    det = rand.det
    assert isinstance(det, Compose) and isinstance(det.inner, Proj2)
    return det.outer


def test_bernoulli_randomiser_exact_lengths():
    space = Fin(("a", "b"))
    mu = sum_measures(
        [
            scale_measure(Fraction(1, 2), dirac("a", space)),
            scale_measure(Fraction(1, 2), dirac("b", space)),
        ]
    )
    rand = randomise_prob(mu)
    det = _det_r(rand)
    assert eval_fn(det, 0.25) == "a"
    assert eval_fn(det, 0.75) == "b"
    pre_a = preimage(det, singleton_set("a", space))
    assert lebesgue_length(pre_a) == Fraction(1, 2)
    pre_b = preimage(det, singleton_set("b", space))
    assert lebesgue_length(pre_b) == Fraction(1, 2)


def test_dirac_randomiser_constant():
    rand = randomise_prob(dirac(7, REAL))
    det = _det_r(rand)
    for u in [0.0, 0.3, 0.99]:
        assert eval_fn(det, u) == 7


def test_uniform_randomiser_is_identity_within_tol():
    rand = randomise_prob(uniform(0, 1), tol=1e-9)
    det = _det_r(rand)
    for u in [0.1, 0.25, 0.5, 0.9]:
        assert abs(float(eval_fn(det, u)) - u) < 1e-6


def test_normal_randomiser_cdf_agreement():
    rand = randomise_prob(normal_measure(0, 1), tol=1e-9)
    det = _det_r(rand)
    assert isinstance(det, InvCdfReal)
    for i in range(21):
        t = -3.0 + 0.3 * i
        got = det.cdf(t)
        expected = 0.5 * (1 + math.erf(t / math.sqrt(2)))
        assert abs(got - expected) < 1e-6


def test_not_probability_rejected():
    with pytest.raises(NotProbability):
        randomise_prob(scale_measure(Fraction(1, 2), uniform(0, 1)))


def test_subprob_randomiser_bottom_region():
    mu = scale_measure(Fraction(3, 10), uniform(0, 1))
    rand = randomise_subprob(mu)
    det = _det_r(rand)
    assert eval_fn(det, 0.5) is BOTTOM
    assert eval_fn(det, 0.1) is not BOTTOM
    # defined-region length is exactly the mass
    defined = preimage(det, FullSet(REAL))
    live = lebesgue_length(defined)
    assert float(live) == pytest.approx(0.3, abs=1e-9)


def test_subprob_zero_kernel_everywhere_bottom():
    from sfkernel.measures import ZeroMeasure

    rand = randomise_subprob(ZeroMeasure(REAL))
    det = _det_r(rand)
    for u in [0.0, 0.5, 0.9]:
        assert eval_fn(det, u) is BOTTOM


def test_probability_subprob_has_no_bottom():
    rand = randomise_subprob(uniform(0, 1))
    det = _det_r(rand)
    assert eval_fn(det, 0.999) is not BOTTOM


def test_poisson_randomiser():
    rand = randomise_prob(poisson_measure(1.0))
    det = _det_r(rand)
    assert isinstance(det, InvCdfNat)
    # p(0) = e^-1 ~ 0.3679: r below lands on 0
    assert eval_fn(det, 0.2) == 0
    assert eval_fn(det, 0.5) == 1
    assert float(det.atom_length(2)) == pytest.approx(math.exp(-1) / 2)


def test_sfinite_randomiser_mass_2_5():
    mu = scale_measure(Fraction(5, 2), uniform(0, 1))
    rand = randomise_sfinite(mu, target=NATUNIT)
    from sfkernel.funcs import Compose

    det_nu = rand.det.outer if isinstance(rand.det, Compose) else rand.det
    assert isinstance(det_nu, NatIndexed)
    assert len(det_nu.cases) == 3
    # slices 0 and 1 fully live; slice 2 half live
    live0 = preimage(det_nu.cases[0], FullSet(REAL))
    live2 = preimage(det_nu.cases[2], FullSet(REAL))
    assert lebesgue_length(
        live0 if not isinstance(live0, FullSet) else interval(0, 1, True, False)
    ) >= 1
    assert float(lebesgue_length(live2)) == pytest.approx(0.5, abs=1e-9)


def test_sfinite_randomiser_subprob_single_slice():
    mu = scale_measure(Fraction(1, 2), uniform(0, 1))
    rand = randomise_sfinite(mu, target=NATUNIT)
    from sfkernel.funcs import Compose

    det_nu = rand.det.outer
    assert isinstance(det_nu, NatIndexed)
    assert len(det_nu.cases) == 1 and not det_nu.cycle
    assert eval_fn(det_nu, (5, 0.3)) is BOTTOM


def test_sfinite_randomiser_infinite_dirac():
    mu = scale_measure(INF, dirac(0, REAL))
    rand = randomise_sfinite(mu, target=NATUNIT)
    from sfkernel.funcs import Compose

    det_nu = rand.det.outer
    assert isinstance(det_nu, NatIndexed)
    assert det_nu.cycle
    for n in [0, 1, 17]:
        assert eval_fn(det_nu, (n, 0.5)) == 0
    assert det_nu.atom_length(0).is_inf


def test_sfinite_randomiser_halfline_for_infinite_dirac():
    mu = scale_measure(INF, dirac(0, REAL))
    rand = randomise_sfinite(mu, target=HALFLINE)
    for h in [0.0, 0.5, 3.75, 100.25]:
        assert eval_fn(rand.det, ((), h)) == 0


def test_iso_nat_unit_examples():
    assert iso_nat_unit_to_halfline((2, 0.25)) == 2.25
    assert iso_halfline_to_nat_unit(3.75) == (3, 0.75)
    rng = random.Random(4)
    for _ in range(1000):
        n = rng.randrange(50)
        u = Fraction(rng.randrange(64), 64)
        h = iso_nat_unit_to_halfline((n, u))
        assert iso_halfline_to_nat_unit(h) == (n, u)


def test_iso_real_examples():
    assert iso_real_to_halfline(0.5) == 0.5
    assert iso_real_to_halfline(-0.5) == 1.5
    # [1, 2) maps onto [2, 3) with slope one
    img = iso_real_image_interval(1, 2)
    assert member(img, 2.5) and not member(img, 1.5) and not member(img, 3.0)
    assert lebesgue_length(img) == 1


def test_iso_real_roundtrip_exact():
    rng = random.Random(9)
    for _ in range(1000):
        r = Fraction(rng.randrange(-800, 800), 64)
        h = iso_real_to_halfline(r)
        assert h >= 0
        assert iso_halfline_to_real(h) == r


def test_iso_fnexprs_match_point_maps():
    fwd = fn_iso_real_to_halfline()
    back = fn_iso_halfline_to_real()
    rng = random.Random(10)
    for _ in range(200):
        r = Fraction(rng.randrange(-400, 400), 32)
        h = eval_fn(fwd, r)
        assert h == iso_real_to_halfline(r)
        assert eval_fn(back, h) == r


def test_iso_interval_measure_preserving():
    rng = random.Random(12)
    for _ in range(100):
        a = Fraction(rng.randrange(-200, 200), 16)
        b = a + Fraction(rng.randrange(1, 64), 16)
        img = iso_real_image_interval(a, b)
        assert lebesgue_length(img) == b - a
        pre = iso_real_preimage_interval(0, 10)
        assert lebesgue_length(pre) == 10


def test_randomised_kernel_classifies():
    rand = randomise_prob(uniform(0, 1))
    pushed = push(ConstK(UNIT, source_measure(rand)), _det_r(rand))
    label = classify_kernel(pushed)
    assert label in ("Probability", "Subprobability", "Finite", "SigmaFinite", "SFinite")


def test_total_randomise_requires_infinite_mass():
    with pytest.raises(FiniteTotalMass):
        total_randomise(uniform(0, 1))


def test_total_randomise_infinite_dirac():
    det = total_randomise(scale_measure(INF, dirac(0, REAL)))
    rng = random.Random(3)
    for _ in range(50):
        r = rng.uniform(-50, 50)
        assert eval_fn(det, r) == 0


def test_total_randomise_lebesgue_pushforward():
    det = total_randomise(lebesgue())
    # pushforward of [0,1] should have measure ~1: estimate the preimage
    # length by scanning source slices that can reach [0,1]
    hits = 0.0
    grid = 4000
    B = 8  # slices beyond +-B cannot land in [0,1]
    for i in range(grid):
        r = -B + 2 * B * (i + 0.5) / grid
        v = eval_fn(det, r)
        if v is not BOTTOM and 0 <= float(v) <= 1:
            hits += 1
    est = hits * (2 * B) / grid
    assert est == pytest.approx(1.0, abs=0.05)


def test_total_randomise_total_everywhere():
    det = total_randomise(lebesgue())
    rng = random.Random(8)
    for _ in range(200):
        r = rng.uniform(-30, 30)
        assert eval_fn(det, r) is not BOTTOM


def test_shell_radius_lebesgue():
    assert shell_radius(lebesgue(), 4) == pytest.approx(2.0, abs=1e-6)


def test_sample_via_dirac():
    rand = randomise_prob(dirac(5, REAL))
    samples = sample_via(rand, (), seed=1, n=20)
    assert all(s == 5 for s in samples)


def test_sample_via_bernoulli_frequency():
    space = Fin(("h", "t"))
    mu = sum_measures(
        [
            scale_measure(Fraction(1, 2), dirac("h", space)),
            scale_measure(Fraction(1, 2), dirac("t", space)),
        ]
    )
    rand = randomise_prob(mu)
    samples = sample_via(rand, (), seed=42, n=10**4)
    freq = sum(1 for s in samples if s == "h") / len(samples)
    assert abs(freq - 0.5) < 0.02


def test_sample_via_subprob_bottom_fraction():
    mu = scale_measure(Fraction(3, 10), uniform(0, 1))
    rand = randomise_subprob(mu)
    samples = sample_via(rand, (), seed=7, n=10**4)
    bot = sum(1 for s in samples if s is BOTTOM) / len(samples)
    assert abs(bot - 0.7) < 0.02


def test_sample_determinism_and_derived_seed():
    rand = randomise_prob(uniform(0, 1), tol=1e-6)
    a = sample_via(rand, (), seed=5, n=10)
    b = sample_via(rand, (), seed=5, n=10)
    assert a == b
    assert derived_seed(5, 0) != derived_seed(5, 1)
    assert derived_seed(5, 3) == derived_seed(5, 3)

"""Exact brute-force reference implementation on finite discrete spaces.

Dense tables over enumerated points with rational (or infinite) weights,
used as ground truth by the property suites.  Deliberately independent of
the symbolic measure machinery: everything here is a plain dict or nested
loop over the full point enumeration, with the infinity conventions
applied through ExtReal arithmetic directly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import NotZeroInftyAbsCont, TypeMismatch
from .extreal import INF, ONE, ZERO, ExtReal, as_ext, ext_mul, ext_sum, rn_div
from .spaces import SpaceExpr, enumerate_points, is_finite_space


@dataclass
class DenseMeasure:
    """Total enumeration of a measure on a finite space."""

    space: SpaceExpr
    weights: dict  # point -> ExtReal

    def __post_init__(self):
        if not is_finite_space(self.space):
            raise TypeMismatch("DenseMeasure needs a finite space")
        pts = enumerate_points(self.space)
        fixed = {}
        for p in pts:
            fixed[p] = as_ext(self.weights.get(p, ZERO))
        self.weights = fixed

    def mass(self, subset=None) -> ExtReal:
        pts = self.weights if subset is None else subset
        return ext_sum(self.weights[p] for p in pts)

    def scaled(self, w) -> "DenseMeasure":
        w = as_ext(w)
        return DenseMeasure(
            self.space, {p: ext_mul(w, v) for p, v in self.weights.items()}
        )

    def plus(self, other: "DenseMeasure") -> "DenseMeasure":
        if other.space != self.space:
            raise TypeMismatch("sum of dense measures on different spaces")
        return DenseMeasure(
            self.space,
            {p: self.weights[p] + other.weights[p] for p in self.weights},
        )

    def __eq__(self, other):
        return (
            isinstance(other, DenseMeasure)
            and self.space == other.space
            and self.weights == other.weights
        )


@dataclass
class DenseKernel:
    """Matrix of weights indexed by (domain point, codomain point); rows
    are DenseMeasures."""

    dom: SpaceExpr
    cod: SpaceExpr
    rows: dict  # domain point -> DenseMeasure

    def __post_init__(self):
        for x in enumerate_points(self.dom):
            if x not in self.rows:
                self.rows[x] = DenseMeasure(self.cod, {})

    def row(self, x) -> DenseMeasure:
        return self.rows[x]

    def __eq__(self, other):
        return (
            isinstance(other, DenseKernel)
            and self.dom == other.dom
            and self.cod == other.cod
            and all(self.rows[x] == other.rows[x] for x in self.rows)
        )


def o_compose(k: DenseKernel, l: DenseKernel) -> DenseKernel:
    """Exact matrix product with the inf * 0 = 0 convention."""
    if k.cod != l.dom:
        raise TypeMismatch("dense kernel shapes do not match")
    mids = enumerate_points(k.cod)
    outs = enumerate_points(l.cod)
    rows = {}
    for x in enumerate_points(k.dom):
        weights = {}
        for z in outs:
            weights[z] = ext_sum(
                ext_mul(k.rows[x].weights[y], l.rows[y].weights[z]) for y in mids
            )
        rows[x] = DenseMeasure(l.cod, weights)
    return DenseKernel(k.dom, l.cod, rows)


def o_identity(space: SpaceExpr) -> DenseKernel:
    rows = {
        x: DenseMeasure(space, {x: ONE}) for x in enumerate_points(space)
    }
    return DenseKernel(space, space, rows)


def o_prod_l(k: DenseKernel, l_rows) -> DenseMeasure:
    raise NotImplementedError("use o_prod_l_kernel")


def o_prod_l_kernel(k: DenseKernel, l: dict, z_space) -> DenseKernel:
    """k (x)^l l where l maps (x, y) -> DenseMeasure on z_space: the
    iterated double sum, inner over z, outer over y."""
    from .spaces import Prod

    cod = Prod(k.cod, z_space)
    rows = {}
    for x in enumerate_points(k.dom):
        weights = {}
        for y in enumerate_points(k.cod):
            inner = l[(x, y)]
            for z in enumerate_points(z_space):
                weights[(y, z)] = ext_mul(k.rows[x].weights[y], inner.weights[z])
        rows[x] = DenseMeasure(cod, weights)
    return DenseKernel(k.dom, cod, rows)


def o_prod_r_kernel(k: DenseKernel, l: DenseKernel) -> DenseKernel:
    """k (x)^r l for l independent of k's output: sum in the other order
    (outer over z, inner over y)."""
    from .spaces import Prod

    if l.dom != k.dom:
        raise TypeMismatch("right product needs factors on one domain")
    cod = Prod(k.cod, l.cod)
    rows = {}
    for x in enumerate_points(k.dom):
        weights = {}
        for z in enumerate_points(l.cod):
            for y in enumerate_points(k.cod):
                # ext_mul in the reversed evaluation order
                weights[(y, z)] = ext_mul(l.rows[x].weights[z], k.rows[x].weights[y])
        rows[x] = DenseMeasure(cod, weights)
    return DenseKernel(k.dom, cod, rows)


def o_zero_infty_abs_cont(nu_p: DenseMeasure, nu: DenseMeasure) -> bool:
    """Pointwise check of plain plus 0-inf absolute continuity."""
    for p, w in nu.weights.items():
        if w.is_zero and not nu_p.weights[p].is_zero:
            return False  # not even <<
    for p, w in nu.weights.items():
        if w.is_inf:
            v = nu_p.weights[p]
            if not (v.is_zero or v.is_inf):
                return False  # {p} is a nu-0-inf set but not one for nu'
    return True


def o_rn(nu_p: DenseMeasure, nu: DenseMeasure) -> dict:
    """Pointwise Radon-Nikodym table, or NotZeroInftyAbsCont."""
    if nu_p.space != nu.space:
        raise TypeMismatch("dense RN needs one space")
    if not o_zero_infty_abs_cont(nu_p, nu):
        raise NotZeroInftyAbsCont("dense pair is not 0-inf absolutely continuous")
    out = {}
    for p, denom in nu.weights.items():
        out[p] = rn_div(nu_p.weights[p], denom)
    return out


def o_score(nu: DenseMeasure, f: dict) -> DenseMeasure:
    return DenseMeasure(
        nu.space, {p: ext_mul(w, as_ext(f[p])) for p, w in nu.weights.items()}
    )


def o_decompose(k: DenseMeasure, l: DenseMeasure):
    """Per-point three-way split: k_a where l is positive-finite or where
    both are infinite; k_inf where l = inf and k is finite positive;
    k_s where l = 0."""
    if k.space != l.space:
        raise TypeMismatch("dense decomposition needs one space")
    ka, kinf, ks = {}, {}, {}
    for p, kw in k.weights.items():
        lw = l.weights[p]
        if lw.is_zero:
            ks[p] = kw
        elif lw.is_inf:
            if kw.is_inf:
                ka[p] = kw
            else:
                kinf[p] = kw
        else:
            ka[p] = kw
    return (
        DenseMeasure(k.space, ka),
        DenseMeasure(k.space, kinf),
        DenseMeasure(k.space, ks),
    )


def o_disintegrate(joint: DenseMeasure, x_space, t_space):
    """Rows of the conditional table joint(x, t)/marginal(x); rows at
    marginal-zero x are arbitrary (filled uniform) and flagged."""
    xs = enumerate_points(x_space)
    ts = enumerate_points(t_space)
    rows = {}
    flagged = set()
    n = len(ts)
    for x in xs:
        marginal = ext_sum(joint.weights[(x, t)] for t in ts)
        if marginal.is_zero:
            rows[x] = DenseMeasure(t_space, {t: ExtReal(Fraction(1, n)) for t in ts})
            flagged.add(x)
            continue
        rows[x] = DenseMeasure(
            t_space, {t: rn_div(joint.weights[(x, t)], marginal) for t in ts}
        )
    return DenseKernel(x_space, t_space, rows), flagged


# ---------------------------------------------------------------------------
# random instances (the generator the seeded suites share)


WEIGHT_CHOICES = [
    ZERO,
    ZERO,
    ONE,
    ExtReal(2),
    ExtReal(Fraction(1, 2)),
    ExtReal(Fraction(1, 3)),
    ExtReal(3),
    ExtReal(Fraction(5, 4)),
    ExtReal(Fraction(2, 3)),
    INF,  # 10% rate
]


def random_space(rng: random.Random, max_size=6):
    from .spaces import Fin

    size = rng.randint(1, max_size)
    labels = tuple(f"p{i}" for i in range(size))
    return Fin(labels)


def random_weight(rng: random.Random) -> ExtReal:
    return rng.choice(WEIGHT_CHOICES)


def random_dense_measure(rng: random.Random, space) -> DenseMeasure:
    return DenseMeasure(
        space, {p: random_weight(rng) for p in enumerate_points(space)}
    )


def random_dense_kernel(rng: random.Random, dom, cod) -> DenseKernel:
    rows = {x: random_dense_measure(rng, cod) for x in enumerate_points(dom)}
    return DenseKernel(dom, cod, rows)

"""Measurable-set terms with decidable membership.

Representations per space:

    Fin   explicit label subset
    Nat   finite set, or cofinite complement of a finite set
    Real  canonical finite union of disjoint intervals, adjoined with a
          finite atom-inclusion list and a finite atom-exclusion list,
          so Lebesgue-null distinctions like [0,1) vs [0,1] stay decidable
    Prod  finite union of rectangles
    Sum   a pair of sets

plus Empty and Full for every space.  Complement, finite union, and
finite intersection are closed; membership is linear in the term size.

The Real canonical form is rebuilt by a single sweep over "cells": sort
all relevant breakpoints, decide membership of each open cell and each
breakpoint, and reassemble maximally-merged intervals with atom lists.
All boolean operations funnel through that sweep, which keeps them exact
and idempotent on canonical inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import TypeMismatch
from .spaces import (
    Fin,
    Nat,
    Prod,
    Real,
    SpaceExpr,
    Sum,
    Unit,
    Inl,
    Inr,
    check_point,
    is_real_value,
)

NEG_INF = -math.inf
POS_INF = math.inf


class SetExpr:
    __slots__ = ()

    @property
    def space(self) -> SpaceExpr:
        raise NotImplementedError


@dataclass(frozen=True)
class EmptySet(SetExpr):
    _space: SpaceExpr

    @property
    def space(self):
        return self._space

    def __repr__(self):
        return "Empty"


@dataclass(frozen=True)
class FullSet(SetExpr):
    _space: SpaceExpr

    @property
    def space(self):
        return self._space

    def __repr__(self):
        return "Full"


@dataclass(frozen=True)
class FinSet(SetExpr):
    _space: Fin
    members: frozenset

    @property
    def space(self):
        return self._space

    def __repr__(self):
        return f"FinSet({sorted(self.members)!r})"


@dataclass(frozen=True)
class NatSet(SetExpr):
    """members if not cofinite, otherwise the complement of members."""

    members: frozenset
    cofinite: bool = False

    @property
    def space(self):
        from .spaces import NAT

        return NAT

    def __repr__(self):
        if self.cofinite:
            return f"NatSet(all but {sorted(self.members)!r})"
        return f"NatSet({sorted(self.members)!r})"


@dataclass(frozen=True)
class Interval:
    """One interval piece; infinite endpoints are always open."""

    lo: object
    hi: object
    lo_closed: bool
    hi_closed: bool

    def contains(self, p) -> bool:
        if p < self.lo or (p == self.lo and not self.lo_closed):
            return False
        if p > self.hi or (p == self.hi and not self.hi_closed):
            return False
        return True

    def length(self):
        from .extreal import INF, ExtReal

        if self.lo == NEG_INF or self.hi == POS_INF:
            return INF
        return ExtReal(self.hi - self.lo)

    def __repr__(self):
        l = "[" if self.lo_closed else "("
        r = "]" if self.hi_closed else ")"
        return f"{l}{self.lo}, {self.hi}{r}"


@dataclass(frozen=True)
class RealSet(SetExpr):
    """(union of intervals minus atoms_out) union atoms_in, canonical."""

    intervals: tuple
    atoms_in: tuple
    atoms_out: tuple

    @property
    def space(self):
        from .spaces import REAL

        return REAL

    def __repr__(self):
        parts = [repr(iv) for iv in self.intervals]
        if self.atoms_in:
            parts.append("+{" + ", ".join(map(str, self.atoms_in)) + "}")
        if self.atoms_out:
            parts.append("-{" + ", ".join(map(str, self.atoms_out)) + "}")
        return "RealSet(" + " ".join(parts) + ")" if parts else "RealSet()"


@dataclass(frozen=True)
class ProdSet(SetExpr):
    _space: Prod
    rects: tuple  # tuple of (SetExpr, SetExpr)

    @property
    def space(self):
        return self._space

    def __repr__(self):
        return "ProdSet(" + " | ".join(f"{a!r} x {b!r}" for a, b in self.rects) + ")"


@dataclass(frozen=True)
class SumSet(SetExpr):
    _space: Sum
    left: SetExpr
    right: SetExpr

    @property
    def space(self):
        return self._space

    def __repr__(self):
        return f"SumSet({self.left!r}, {self.right!r})"


# ---------------------------------------------------------------------------
# constructors


def fin_set(space: Fin, members) -> SetExpr:
    members = frozenset(members)
    bad = members - set(space.labels)
    if bad:
        raise TypeMismatch(f"labels {bad} not in space {space!r}")
    if not members:
        return EmptySet(space)
    if members == set(space.labels):
        return FullSet(space)
    return FinSet(space, members)


def nat_set(members, cofinite=False) -> SetExpr:
    from .spaces import NAT

    members = frozenset(members)
    for m in members:
        if not (isinstance(m, int) and not isinstance(m, bool) and m >= 0):
            raise TypeMismatch(f"{m!r} is not a natural number")
    if cofinite:
        if not members:
            return FullSet(NAT)
        return NatSet(members, True)
    if not members:
        return EmptySet(NAT)
    return NatSet(members, False)


def _check_endpoint(v):
    if v in (NEG_INF, POS_INF):
        return v
    if isinstance(v, bool) or not isinstance(v, (int, float, Fraction)):
        raise TypeMismatch(f"bad interval endpoint {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    return v


def interval(lo, hi, lo_closed=True, hi_closed=True) -> SetExpr:
    """The single interval from lo to hi (defaults closed); +-inf ends are
    open regardless of the flags."""
    lo = _check_endpoint(lo)
    hi = _check_endpoint(hi)
    if lo == NEG_INF:
        lo_closed = False
    if hi == POS_INF:
        hi_closed = False
    return real_set([Interval(lo, hi, lo_closed, hi_closed)])


def real_atoms(points) -> SetExpr:
    return real_set([], atoms_in=points)


def real_line() -> SetExpr:
    return interval(NEG_INF, POS_INF)


def _midpoint(lo, hi):
    if lo == NEG_INF and hi == POS_INF:
        return 0
    if lo == NEG_INF:
        return hi - 1
    if hi == POS_INF:
        return lo + 1
    return (lo + hi) / 2 if isinstance(lo, float) or isinstance(hi, float) else Fraction(lo + hi, 2)


def _raw_member(p, intervals, atoms_in, atoms_out):
    if p in atoms_in:
        return True
    if p in atoms_out:
        return False
    return any(iv.contains(p) for iv in intervals)


def _sweep(breakpoints, cell_pred, point_pred) -> SetExpr:
    """Rebuild a canonical RealSet from membership oracles.

    breakpoints: sorted distinct finite values; cell_pred(mid) decides the
    open cell containing mid; point_pred(b) decides each breakpoint."""
    from .spaces import REAL

    n = len(breakpoints)
    cells = []  # membership of (-inf,b0),(b0,b1),...,(b_{n-1},inf)
    for i in range(n + 1):
        lo = NEG_INF if i == 0 else breakpoints[i - 1]
        hi = POS_INF if i == n else breakpoints[i]
        cells.append(cell_pred(_midpoint(lo, hi)))
    points = [point_pred(b) for b in breakpoints]

    intervals = []
    atoms_in = []
    atoms_out = []
    cur = None  # [lo, lo_closed] of the open run, else None
    for i in range(n + 1):
        lo = NEG_INF if i == 0 else breakpoints[i - 1]
        hi = POS_INF if i == n else breakpoints[i]
        if cells[i]:
            if cur is None:
                # does the left breakpoint belong? (only if i > 0)
                closed = i > 0 and points[i - 1]
                cur = [lo, closed]
                if closed:
                    points[i - 1] = None  # consumed
            # right end handled when the run stops
        if i < n:
            if cells[i] and cells[i + 1]:
                # run continues across the breakpoint
                if points[i]:
                    points[i] = None  # interior point, absorbed
                else:
                    atoms_out.append(breakpoints[i])
                    points[i] = None
            elif cells[i] and not cells[i + 1]:
                closed = bool(points[i])
                if closed:
                    points[i] = None
                intervals.append(Interval(cur[0], breakpoints[i], cur[1], closed))
                cur = None
        else:
            if cells[i]:
                intervals.append(Interval(cur[0], POS_INF, cur[1], False))
                cur = None
    for b, keep in zip(breakpoints, points):
        if keep:
            atoms_in.append(b)

    if not intervals and not atoms_in:
        return EmptySet(REAL)
    if (
        len(intervals) == 1
        and intervals[0].lo == NEG_INF
        and intervals[0].hi == POS_INF
        and not atoms_out
    ):
        return FullSet(REAL)
    return RealSet(tuple(intervals), tuple(atoms_in), tuple(atoms_out))


def real_set(intervals, atoms_in=(), atoms_out=()) -> SetExpr:
    """Canonicalise (union of intervals minus atoms_out) union atoms_in."""
    ivs = []
    extra_atoms = set()
    for iv in intervals:
        lo = _check_endpoint(iv.lo)
        hi = _check_endpoint(iv.hi)
        lo_closed = iv.lo_closed and lo != NEG_INF
        hi_closed = iv.hi_closed and hi != POS_INF
        if lo > hi:
            continue
        if lo == hi:
            if lo_closed and hi_closed:
                extra_atoms.add(lo)
            continue
        ivs.append(Interval(lo, hi, lo_closed, hi_closed))
    atoms_in = {_check_endpoint(a) for a in atoms_in} | extra_atoms
    atoms_out = {_check_endpoint(a) for a in atoms_out}

    bps = set(atoms_in) | set(atoms_out)
    for iv in ivs:
        if iv.lo != NEG_INF:
            bps.add(iv.lo)
        if iv.hi != POS_INF:
            bps.add(iv.hi)
    bps = sorted(bps)
    return _sweep(
        bps,
        lambda mid: any(iv.contains(mid) for iv in ivs),
        lambda b: _raw_member(b, ivs, atoms_in, atoms_out),
    )


def prod_set(space: Prod, rects) -> SetExpr:
    kept = []
    for a, b in rects:
        if a.space != space.left or b.space != space.right:
            raise TypeMismatch("rectangle components do not match the product space")
        if isinstance(a, EmptySet) or isinstance(b, EmptySet):
            continue
        kept.append((a, b))
    if not kept:
        return EmptySet(space)
    if len(kept) == 1 and isinstance(kept[0][0], FullSet) and isinstance(kept[0][1], FullSet):
        return FullSet(space)
    return ProdSet(space, tuple(kept))


def sum_set(space: Sum, left: SetExpr, right: SetExpr) -> SetExpr:
    if left.space != space.left or right.space != space.right:
        raise TypeMismatch("component sets do not match the sum space")
    if isinstance(left, EmptySet) and isinstance(right, EmptySet):
        return EmptySet(space)
    if isinstance(left, FullSet) and isinstance(right, FullSet):
        return FullSet(space)
    return SumSet(space, left, right)


def rectangle(a: SetExpr, b: SetExpr) -> SetExpr:
    return prod_set(Prod(a.space, b.space), [(a, b)])


# ---------------------------------------------------------------------------
# membership


def member(s: SetExpr, p) -> bool:
    """Decide p in s; raises TypeMismatch if p does not fit s's space."""
    check_point(p, s.space)
    return _member(s, p)


def _member(s: SetExpr, p) -> bool:
    if isinstance(s, EmptySet):
        return False
    if isinstance(s, FullSet):
        return True
    if isinstance(s, FinSet):
        return p in s.members
    if isinstance(s, NatSet):
        inside = p in s.members
        return not inside if s.cofinite else inside
    if isinstance(s, RealSet):
        return _raw_member(p, s.intervals, s.atoms_in, s.atoms_out)
    if isinstance(s, ProdSet):
        return any(_member(a, p[0]) and _member(b, p[1]) for a, b in s.rects)
    if isinstance(s, SumSet):
        if isinstance(p, Inl):
            return _member(s.left, p.value)
        return _member(s.right, p.value)
    raise TypeMismatch(f"not a set expression: {s!r}")


# ---------------------------------------------------------------------------
# boolean algebra


def _real_breakpoints(s: SetExpr):
    if isinstance(s, RealSet):
        pts = set(s.atoms_in) | set(s.atoms_out)
        for iv in s.intervals:
            if iv.lo != NEG_INF:
                pts.add(iv.lo)
            if iv.hi != POS_INF:
                pts.add(iv.hi)
        return pts
    return set()


def _real_combine(sets, pred) -> SetExpr:
    bps = set()
    for s in sets:
        bps |= _real_breakpoints(s)
    bps = sorted(bps)
    return _sweep(
        bps,
        lambda mid: pred([_member(s, mid) for s in sets]),
        lambda b: pred([_member(s, b) for s in sets]),
    )


def complement(s: SetExpr) -> SetExpr:
    space = s.space
    if isinstance(s, EmptySet):
        return FullSet(space)
    if isinstance(s, FullSet):
        return EmptySet(space)
    if isinstance(s, FinSet):
        return fin_set(space, set(space.labels) - s.members)
    if isinstance(s, NatSet):
        return nat_set(s.members, cofinite=not s.cofinite)
    if isinstance(s, RealSet):
        return _real_combine([s], lambda ms: not ms[0])
    if isinstance(s, ProdSet):
        # complement of a union of rectangles: intersect the rectangle
        # complements (A x B)^c = (A^c x Full) | (A x B^c)
        acc = FullSet(space)
        for a, b in s.rects:
            piece = prod_set(
                space,
                [
                    (complement(a), FullSet(space.right)),
                    (a, complement(b)),
                ],
            )
            acc = intersect(acc, piece)
        return acc
    if isinstance(s, SumSet):
        return sum_set(space, complement(s.left), complement(s.right))
    raise TypeMismatch(f"not a set expression: {s!r}")


def _as_sum_pair(s: SetExpr):
    if isinstance(s, SumSet):
        return s.left, s.right
    space = s.space
    cls = EmptySet if isinstance(s, EmptySet) else FullSet
    return cls(space.left), cls(space.right)


def _as_rects(s: SetExpr):
    if isinstance(s, ProdSet):
        return s.rects
    space = s.space
    if isinstance(s, EmptySet):
        return ()
    return ((FullSet(space.left), FullSet(space.right)),)


def union(a: SetExpr, b: SetExpr) -> SetExpr:
    if a.space != b.space:
        raise TypeMismatch("union of sets on different spaces")
    space = a.space
    if isinstance(a, FullSet) or isinstance(b, FullSet):
        return FullSet(space)
    if isinstance(a, EmptySet):
        return b
    if isinstance(b, EmptySet):
        return a
    if isinstance(space, Fin):
        return fin_set(space, a.members | b.members)
    if isinstance(space, Nat):
        if a.cofinite and b.cofinite:
            return nat_set(a.members & b.members, cofinite=True)
        if a.cofinite:
            return nat_set(a.members - b.members, cofinite=True)
        if b.cofinite:
            return nat_set(b.members - a.members, cofinite=True)
        return nat_set(a.members | b.members)
    if isinstance(space, Real):
        return _real_combine([a, b], lambda ms: ms[0] or ms[1])
    if isinstance(space, Prod):
        return prod_set(space, _as_rects(a) + _as_rects(b))
    if isinstance(space, Sum):
        al, ar = _as_sum_pair(a)
        bl, br = _as_sum_pair(b)
        return sum_set(space, union(al, bl), union(ar, br))
    if isinstance(space, Unit):
        return FullSet(space)
    raise TypeMismatch(f"cannot union sets on {space!r}")


def intersect(a: SetExpr, b: SetExpr) -> SetExpr:
    if a.space != b.space:
        raise TypeMismatch("intersection of sets on different spaces")
    space = a.space
    if isinstance(a, EmptySet) or isinstance(b, EmptySet):
        return EmptySet(space)
    if isinstance(a, FullSet):
        return b
    if isinstance(b, FullSet):
        return a
    if isinstance(space, Fin):
        return fin_set(space, a.members & b.members)
    if isinstance(space, Nat):
        if a.cofinite and b.cofinite:
            return nat_set(a.members | b.members, cofinite=True)
        if a.cofinite:
            return nat_set(b.members - a.members)
        if b.cofinite:
            return nat_set(a.members - b.members)
        return nat_set(a.members & b.members)
    if isinstance(space, Real):
        return _real_combine([a, b], lambda ms: ms[0] and ms[1])
    if isinstance(space, Prod):
        rects = [
            (intersect(a1, a2), intersect(b1, b2))
            for a1, b1 in _as_rects(a)
            for a2, b2 in _as_rects(b)
        ]
        return prod_set(space, rects)
    if isinstance(space, Sum):
        al, ar = _as_sum_pair(a)
        bl, br = _as_sum_pair(b)
        return sum_set(space, intersect(al, bl), intersect(ar, br))
    raise TypeMismatch(f"cannot intersect sets on {space!r}")


def difference(a: SetExpr, b: SetExpr) -> SetExpr:
    return intersect(a, complement(b))


def union_all(sets, space=None) -> SetExpr:
    sets = list(sets)
    if not sets:
        if space is None:
            raise TypeMismatch("union_all of nothing needs an explicit space")
        return EmptySet(space)
    acc = sets[0]
    for s in sets[1:]:
        acc = union(acc, s)
    return acc


def is_empty_set(s: SetExpr) -> bool:
    """Structural emptiness (canonical forms make this complete for
    Fin/Nat/Real; for products it is complete after rectangle dropping)."""
    if isinstance(s, EmptySet):
        return True
    if isinstance(s, SumSet):
        return is_empty_set(s.left) and is_empty_set(s.right)
    if isinstance(s, ProdSet):
        return all(is_empty_set(a) or is_empty_set(b) for a, b in s.rects)
    return False


def disjoint_rectangles(s: SetExpr):
    """Rewrite a product set as a list of pairwise-disjoint rectangles."""
    if not isinstance(s.space, Prod):
        raise TypeMismatch("disjoint_rectangles needs a product-space set")
    done = []
    for rect in _as_rects(s):
        pieces = [rect]
        for da, db in done:
            nxt = []
            for a, b in pieces:
                # (a x b) minus (da x db)
                a_out = difference(a, da)
                if not is_empty_set(a_out):
                    nxt.append((a_out, b))
                a_in = intersect(a, da)
                b_out = difference(b, db)
                if not is_empty_set(a_in) and not is_empty_set(b_out):
                    nxt.append((a_in, b_out))
            pieces = nxt
        done.extend(pieces)
    return done


def section_at(s: SetExpr, x) -> SetExpr:
    """The section {y : (x, y) in s} of a product-space set."""
    space = s.space
    if not isinstance(space, Prod):
        raise TypeMismatch("section_at needs a product-space set")
    check_point(x, space.left)
    if isinstance(s, EmptySet):
        return EmptySet(space.right)
    if isinstance(s, FullSet):
        return FullSet(space.right)
    parts = [b for a, b in s.rects if _member(a, x)]
    return union_all(parts, space.right)


def section_at_right(s: SetExpr, y) -> SetExpr:
    """The section {x : (x, y) in s} of a product-space set."""
    space = s.space
    if not isinstance(space, Prod):
        raise TypeMismatch("section_at_right needs a product-space set")
    check_point(y, space.right)
    if isinstance(s, EmptySet):
        return EmptySet(space.left)
    if isinstance(s, FullSet):
        return FullSet(space.left)
    parts = [a for a, b in s.rects if _member(b, y)]
    return union_all(parts, space.left)


def lebesgue_length(s: SetExpr):
    """Lebesgue measure of a Real set (atoms are null)."""
    from .extreal import ZERO, ExtReal, ext_sum

    if isinstance(s, EmptySet):
        return ZERO
    if isinstance(s, FullSet):
        from .extreal import INF

        return INF
    if not isinstance(s, RealSet):
        raise TypeMismatch("lebesgue_length needs a Real set")
    return ext_sum(iv.length() for iv in s.intervals)


def count_members(s: SetExpr):
    """Counting measure of a Fin or Nat set (inf for cofinite)."""
    from .extreal import INF, ExtReal

    if isinstance(s, EmptySet):
        return ExtReal(0)
    if isinstance(s, FullSet):
        if isinstance(s.space, Fin):
            return ExtReal(len(s.space.labels))
        return INF
    if isinstance(s, FinSet):
        return ExtReal(len(s.members))
    if isinstance(s, NatSet):
        return INF if s.cofinite else ExtReal(len(s.members))
    raise TypeMismatch("count_members needs a Fin or Nat set")


def enumerate_set(s: SetExpr):
    """Members of a finite Fin/Nat set, sorted."""
    if isinstance(s, EmptySet):
        return []
    if isinstance(s, FullSet) and isinstance(s.space, Fin):
        return list(s.space.labels)
    if isinstance(s, FinSet):
        return [l for l in s.space.labels if l in s.members]
    if isinstance(s, NatSet) and not s.cofinite:
        return sorted(s.members)
    raise TypeMismatch(f"cannot enumerate {s!r}")

"""Deterministic adaptive Simpson quadrature with absolute-error targets.

Used by the numeric path of integration.  Returns a (value, error_bound)
pair; the bound is the usual Richardson estimate accumulated over the
subdivision and is honest rather than sharp.  Infinite endpoints are
mapped onto finite intervals with algebraic substitutions, which is
adequate for the integrable, decaying densities this package produces.

An evaluation that returns inf poisons the whole integral to inf (the
integrand is nonnegative, so this is sound).
"""

from __future__ import annotations

import math

MAX_DEPTH = 60


class _InfIntegral(Exception):
    pass


def _simpson(f, a, fa, b, fb, m, fm):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _eval(f, x):
    v = f(x)
    v = float(v)
    if math.isnan(v):
        raise ValueError(f"integrand returned NaN at {x}")
    if v == math.inf:
        raise _InfIntegral
    if v < 0:
        # Nonnegative integrands only; tiny negative noise is clipped.
        if v > -1e-12:
            return 0.0
        raise ValueError(f"integrand returned negative value {v} at {x}")
    return v


def _adapt(f, a, fa, b, fb, m, fm, whole, tol, depth):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = _eval(f, lm)
    frm = _eval(f, rm)
    left = _simpson(f, a, fa, m, fm, lm, flm)
    right = _simpson(f, m, fm, b, fb, rm, frm)
    delta = left + right - whole
    if depth >= MAX_DEPTH or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0, abs(delta) / 15.0
    v1, e1 = _adapt(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth + 1)
    v2, e2 = _adapt(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth + 1)
    return v1 + v2, e1 + e2


def simpson_finite(f, a, b, tol):
    """Adaptive Simpson on a finite interval; returns (value, bound)."""
    a, b = float(a), float(b)
    if a == b:
        return 0.0, 0.0
    try:
        fa = _eval(f, a)
        fb = _eval(f, b)
        m = 0.5 * (a + b)
        fm = _eval(f, m)
        whole = _simpson(f, a, fa, b, fb, m, fm)
        return _adapt(f, a, fa, b, fb, m, fm, whole, tol, 0)
    except _InfIntegral:
        return math.inf, 0.0


def _halfline_up(f, a, tol):
    # x = a + t/(1-t), dx = dt/(1-t)^2, t in [0, 1)
    def g(t):
        if t >= 1.0:
            return 0.0
        u = 1.0 - t
        return f(a + t / u) / (u * u)

    return simpson_finite(g, 0.0, 1.0, tol)


def _halfline_down(f, b, tol):
    # x = b - t/(1-t)
    def g(t):
        if t >= 1.0:
            return 0.0
        u = 1.0 - t
        return f(b - t / u) / (u * u)

    return simpson_finite(g, 0.0, 1.0, tol)


def integrate_interval(f, a, b, tol):
    """Integrate a nonnegative f over [a, b] where either endpoint may be
    +-inf.  Returns (value, error_bound); value may be math.inf."""
    a, b = float(a), float(b)
    if a > b:
        return 0.0, 0.0
    if a == -math.inf and b == math.inf:
        v1, e1 = _halfline_down(f, 0.0, tol / 2.0)
        v2, e2 = _halfline_up(f, 0.0, tol / 2.0)
        return v1 + v2, e1 + e2
    if b == math.inf:
        return _halfline_up(f, a, tol)
    if a == -math.inf:
        return _halfline_down(f, b, tol)
    return simpson_finite(f, a, b, tol)

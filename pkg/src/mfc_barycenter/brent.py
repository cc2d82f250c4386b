"""Brent's derivative-free scalar minimizer (golden section + parabolic steps).

``_brent`` is written in the numba-compatible subset so the same source serves both
the pure-Python entry point and the jitted per-point density solves.
"""

from __future__ import annotations

import math

import numba

from .errors import NumericalError

GOLDEN = 0.3819660112501051  # (3 - sqrt(5)) / 2
DEFAULT_TOL = 1e-8
DEFAULT_MAXITER = 200


def _brent(f, args, lo, hi, tol, maxiter):
    """Minimize ``f(x, args)`` on [lo, hi]; returns (x, f(x), iterations, ok).

    ``ok`` is False when a non-finite objective value was met.
    """
    a = lo
    b = hi
    x = a + GOLDEN * (b - a)
    w = x
    v = x
    fx = f(x, args)
    if not math.isfinite(fx):
        return x, fx, 0, False
    fw = fx
    fv = fx
    d = 0.0
    e = 0.0
    it = 0
    while it < maxiter:
        m = 0.5 * (a + b)
        tol1 = 0.5 * tol + 1e-15 * abs(x)
        tol2 = 2.0 * tol1
        if abs(x - m) <= tol2 - 0.5 * (b - a):
            break
        golden_step = True
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            else:
                q = -q
            etemp = e
            e = d
            if abs(p) < abs(0.5 * q * etemp) and p > q * (a - x) and p < q * (b - x):
                d = p / q
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = tol1 if m >= x else -tol1
                golden_step = False
        if golden_step:
            e = (b - x) if x < m else (a - x)
            d = GOLDEN * e
        if abs(d) >= tol1:
            u = x + d
        else:
            u = x + (tol1 if d > 0.0 else -tol1)
        fu = f(u, args)
        if not math.isfinite(fu):
            return u, fu, it, False
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v = w
            fv = fw
            w = x
            fw = fx
            x = u
            fx = fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v = w
                fv = fw
                w = u
                fw = fu
            elif fu <= fv or v == x or v == w:
                v = u
                fv = fu
        it += 1
    return x, fx, it, True


brent_jit = numba.njit(_brent)


def _call(x, f):
    return f(x)


def brent_minimize(f, lo: float, hi: float, tol: float = DEFAULT_TOL, maxiter: int = DEFAULT_MAXITER):
    """Minimize a scalar function on [lo, hi].

    Returns ``(argmin, min_value)``. The endpoints are compared at the end, so the
    result never exceeds ``min(f(lo), f(hi))``; boundary minimizers come back exact.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    x, fx, _, ok = _brent(_call, f, float(lo), float(hi), tol, maxiter)
    if not ok:
        raise NumericalError(f"objective is not finite at x={x}")
    for xe in (lo, hi):
        fe = f(xe)
        if not math.isfinite(fe):
            raise NumericalError(f"objective is not finite at x={xe}")
        if fe <= fx:
            x, fx = float(xe), fe
    return x, fx

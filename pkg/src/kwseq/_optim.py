"""Derivative-free scalar minimization on a bounded interval.

Golden-section search accelerated by successive parabolic interpolation
(Brent's localmin scheme).  The tolerance semantics match the classic
implementation: the bracket is shrunk until it is within
2 * (sqrt(eps) * |x| + tol / 3) of the current best point, while the
parabolic steps usually place the best point far more accurately than
the bracket width suggests.
"""

import math

__all__ = ["brent_minimize"]

_GOLD = 0.5 * (3.0 - math.sqrt(5.0))
_SQRT_EPS = math.sqrt(2.0 ** -52)


def brent_minimize(func, lo, hi, xatol=1e-4, max_iter=500):
    """Minimize func on (lo, hi); returns (x, func(x), evaluations)."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got ({lo!r}, {hi!r})")
    a, b = lo, hi
    v = w = x = a + _GOLD * (b - a)
    fv = fw = fx = func(x)
    nfev = 1
    d = e = 0.0
    tol3 = xatol / 3.0

    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        tol1 = _SQRT_EPS * abs(x) + tol3
        tol2 = 2.0 * tol1
        if abs(x - mid) <= tol2 - 0.5 * (b - a):
            break

        use_golden = True
        if abs(e) > tol1:
            # fit a parabola through (v, fv), (w, fw), (x, fx)
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            e_prev = e
            e = d
            if (abs(p) < abs(0.5 * q * e_prev)
                    and p > q * (a - x) and p < q * (b - x)):
                d = p / q
                u = x + d
                if (u - a) < tol2 or (b - u) < tol2:
                    d = tol1 if x < mid else -tol1
                use_golden = False
        if use_golden:
            e = (b - x) if x < mid else (a - x)
            d = _GOLD * e

        u = x + d if abs(d) >= tol1 else x + (tol1 if d > 0.0 else -tol1)
        fu = func(u)
        nfev += 1

        if fu <= fx:
            if u < x:
                b = x
            else:
                a = x
            v, fv = w, fw
            w, fw = x, fx
            x, fx = u, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, fv = w, fw
                w, fw = u, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu

    return x, fx, nfev

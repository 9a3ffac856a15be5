"""Closed-form integrals of polynomials against polynomial and power densities.

Polynomials are carried as ``(coeffs, origin)`` pairs: ascending coefficients
in powers of ``(x - origin)``.  Improper integrals are decided term by term, so
divergence is an exact yes/no answer rather than a numerical guess.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import polynomial as P

# coefficients below this fraction of the largest one are treated as zero when
# deciding divergence (shifting polynomials leaves ~1e-16 residue)
_REL_ZERO = 1e-13


def trim(coeffs) -> np.ndarray:
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    nz = np.nonzero(c)[0]
    if nz.size == 0:
        return np.zeros(1)
    return c[: nz[-1] + 1]


def shift(coeffs, old_origin: float, new_origin: float) -> np.ndarray:
    """Re-express p(x - old_origin) in powers of (x - new_origin)."""
    c = trim(coeffs)
    d = new_origin - old_origin
    if d == 0.0 or c.size == 1:
        return c.copy()
    out = np.array([c[-1]])
    for ck in c[-2::-1]:
        out = P.polymul(out, [d, 1.0])
        out[0] += ck
    return out


def polyval(coeffs, origin: float, x: float) -> float:
    return float(P.polyval(x - origin, coeffs))


def _divergence_sign(coeffs) -> float:
    c = trim(coeffs)
    return math.copysign(1.0, c[-1]) if np.any(c) else 0.0


def integrate_polynomial(coeffs, origin: float, u: float, v: float) -> float:
    """Integral of a polynomial over [u, v]; u may be -inf, v may be +inf."""
    c = trim(coeffs)
    if not np.any(c):
        return 0.0
    lo_inf = math.isinf(u)
    hi_inf = math.isinf(v)
    if lo_inf or hi_inf:
        s_hi = _divergence_sign(c) if hi_inf else 0.0
        # behaviour of c_n x^n as x -> -inf
        s_lo = _divergence_sign(c) * (-1) ** (c.size - 1) if lo_inf else 0.0
        if s_hi and s_lo and s_hi != s_lo:
            raise ValueError("indeterminate improper integral (inf - inf)")
        return (s_hi or s_lo) * math.inf
    prim = P.polyint(c)
    return float(P.polyval(v - origin, prim) - P.polyval(u - origin, prim))


def _power_term(e: float, s0: float, s1: float) -> float:
    """Integral of s**e over [s0, s1] with 0 <= s0 < s1 <= inf (may be inf)."""
    if e == -1.0:
        if s0 == 0.0 or math.isinf(s1):
            return math.inf
        return math.log(s1) - math.log(s0)
    f = e + 1.0
    if (s0 == 0.0 and f < 0) or (math.isinf(s1) and f > 0):
        return math.inf
    hi = 0.0 if math.isinf(s1) else s1**f
    lo = 0.0 if s0 == 0.0 else s0**f
    return (hi - lo) / f


def integrate_power(
    scale: float,
    exponent: float,
    anchor: float,
    coeffs,
    origin: float,
    u: float,
    v: float,
) -> float:
    """Integral over [u, v] of q(x) * scale * |x - anchor|**exponent.

    The anchor must not lie inside (u, v).  q is given by ``coeffs`` about
    ``origin``.
    """
    if not u < v:
        return 0.0
    if scale == 0.0:
        return 0.0
    q = shift(coeffs, origin, anchor)
    if anchor <= u:
        s0, s1 = u - anchor, v - anchor
    elif anchor >= v:
        s0, s1 = anchor - v, anchor - u
        q = q * (-1.0) ** np.arange(q.size)
    else:
        raise ValueError("power anchor inside integration range")
    qmax = np.max(np.abs(q))
    if qmax == 0.0:
        return 0.0
    finite = 0.0
    div_zero = None  # (exponent, sign) of dominating divergence at s -> 0
    div_inf = None
    for k, qk in enumerate(q):
        if abs(qk) <= _REL_ZERO * qmax:
            continue
        e = k + exponent
        val = _power_term(e, s0, s1)
        if math.isinf(val):
            sign = math.copysign(1.0, qk * scale)
            if s0 == 0.0 and e <= -1.0:
                if div_zero is None or e < div_zero[0]:
                    div_zero = (e, sign)
            else:
                if div_inf is None or e > div_inf[0]:
                    div_inf = (e, sign)
        else:
            finite += scale * qk * val
    signs = {d[1] for d in (div_zero, div_inf) if d is not None}
    if len(signs) > 1:
        raise ValueError("indeterminate improper integral (inf - inf)")
    if signs:
        return signs.pop() * math.inf
    return finite


def add(a: float, b: float) -> float:
    """Extended-real addition that refuses inf - inf."""
    s = a + b
    if math.isnan(s):
        raise ValueError("indeterminate sum (inf - inf)")
    return s

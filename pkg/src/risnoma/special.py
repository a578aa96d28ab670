"""Regularized lower incomplete gamma function P(a, x).

Series expansion for ``x < a + 1`` and a modified-Lentz continued fraction
for Q = 1 - P otherwise. Absolute accuracy is about 1e-12 or better.
"""

import math

import numpy as np

from . import _accel
from ._accel import njit

EPS = 1e-15
TINY = 1e-300
MAX_ITER = 100_000


@njit
def _p_scalar(a, x, lga):
    if x <= 0.0:
        return 0.0
    if x == math.inf:
        return 1.0
    log_pref = a * math.log(x) - x - lga
    if x < a + 1.0:
        ap = a
        term = 1.0 / a
        total = term
        for _ in range(MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * EPS:
                break
        return min(1.0, total * math.exp(log_pref))
    b = x + 1.0 - a
    c = 1.0 / TINY
    d = 1.0 / b
    f = d
    for i in range(1, MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < TINY:
            d = TINY
        c = b + an / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        f *= delta
        if abs(delta - 1.0) < EPS:
            break
    return max(0.0, 1.0 - math.exp(log_pref) * f)


@njit
def _p_loop(a, x, lga):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = _p_scalar(a, x[i], lga)
    return out


def _p_numpy(a, x, lga):
    out = np.zeros_like(x)
    out[x == np.inf] = 1.0
    pos = (x > 0) & (x < np.inf)
    ser = pos & (x < a + 1.0)
    cf = pos & ~ser

    if ser.any():
        xs = x[ser]
        ap = a
        term = np.full_like(xs, 1.0 / a)
        total = term.copy()
        for _ in range(MAX_ITER):
            ap += 1.0
            term *= xs / ap
            total += term
            if np.all(np.abs(term) < np.abs(total) * EPS):
                break
        out[ser] = np.minimum(1.0, total * np.exp(a * np.log(xs) - xs - lga))

    if cf.any():
        xc = x[cf]
        b = xc + 1.0 - a
        c = np.full_like(xc, 1.0 / TINY)
        d = 1.0 / b
        f = d.copy()
        for i in range(1, MAX_ITER):
            an = -i * (i - a)
            b = b + 2.0
            d = an * d + b
            d = np.where(np.abs(d) < TINY, TINY, d)
            c = b + an / c
            c = np.where(np.abs(c) < TINY, TINY, c)
            d = 1.0 / d
            delta = d * c
            f *= delta
            if np.all(np.abs(delta - 1.0) < EPS):
                break
        out[cf] = np.maximum(0.0, 1.0 - np.exp(a * np.log(xc) - xc - lga) * f)
    return out


def regularized_gamma_p(a, x):
    """P(a, x) = gamma_lower(a, x) / Gamma(a) for scalar ``a > 0``.

    ``x`` may be a scalar or an array; nonpositive ``x`` maps to 0.
    """
    if not a > 0:
        raise ValueError(f"shape must be positive, got {a}")
    arr = np.asarray(x, dtype=np.float64)
    flat = np.ascontiguousarray(arr.ravel())
    lga = math.lgamma(a)
    impl = _p_loop if _accel.USE_NUMBA else _p_numpy
    res = impl(float(a), flat, lga).reshape(arr.shape)
    return float(res) if res.ndim == 0 else res

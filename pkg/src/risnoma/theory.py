"""Analytical performance of the RIS-partitioned downlink.

Outage
    For large partitions the coherent amplitude sum ``A`` of user ``k`` is
    approximately real Gaussian and the leakage ``B`` from the other
    partitions is approximately circular complex Gaussian. Outage is
    ``Pr[A^2 - r |B|^2 < r N0 / Pt]``; the left-hand side has a closed-form
    characteristic function which is inverted numerically (Gil-Pelaez).

Error rates
    The SINR population is fitted with a Gamma law by maximum likelihood and
    the M-PSK symbol error probability follows from the Gamma MGF.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .special import regularized_gamma_p

PI = math.pi
# E[alpha beta] / (sigma_h sigma_g) and Var[alpha beta] / (sigma_h^2 sigma_g^2)
PRODUCT_MEAN = PI / 4.0
PRODUCT_VAR = 1.0 - PI ** 2 / 16.0


class NumericalFailure(ArithmeticError):
    """A quadrature did not converge; ``diagnostics`` says how far it got."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics

    def __str__(self):
        extra = ", ".join(f"{k}={v!r}" for k, v in self.diagnostics.items())
        return f"{self.args[0]} ({extra})" if extra else self.args[0]


class DegenerateInputError(ValueError):
    pass


# -- CLT moments -------------------------------------------------------------

@dataclass(frozen=True)
class UsefulMoments:
    mu_a: float
    var_a: float


@dataclass(frozen=True)
class InterferenceMoments:
    var_b: float
    mu_b: float = 0.0


def useful_moments(n_g: int, sigma2_h: float, sigma2_g: float) -> UsefulMoments:
    amp = math.sqrt(sigma2_h * sigma2_g)
    return UsefulMoments(n_g * amp * PRODUCT_MEAN, n_g * sigma2_h * sigma2_g * PRODUCT_VAR)


def interference_variance(n_g: int, n_users: int, sigma2_h: float, sigma2_g: float,
                          n_interfering: Optional[int] = None) -> InterferenceMoments:
    """Variance of the complex leakage sum.

    Each leaking element contributes ``sigma2_h * sigma2_g``. By default there
    are ``n_g * (K - 1)`` of them; pass ``n_interfering`` for unequal splits.
    """
    if n_users < 1:
        raise ValueError("n_users must be >= 1")
    count = n_g * (n_users - 1) if n_interfering is None else n_interfering
    return InterferenceMoments(count * sigma2_h * sigma2_g)


@dataclass(frozen=True)
class OutageQuery:
    r_k: float
    upsilon: float


def outage_query(rate: float, bandwidth: float, pt_linear: float, n0_linear: float) -> OutageQuery:
    r = 2.0 ** (rate / bandwidth) - 1.0
    return OutageQuery(r, r * n0_linear / pt_linear)


# -- characteristic function and inversion -----------------------------------

def upsilon_cf(omega, mu_a: float, var_a: float, var_b_prime: float):
    """CF of ``A^2 - |B'|^2`` with ``A ~ N(mu_a, var_a)`` and ``B'`` circular
    complex Gaussian with per-dimension variance ``var_b_prime``."""
    w = np.asarray(omega, dtype=np.float64)
    d = 1.0 - 2j * w * var_a
    return np.exp(1j * w * mu_a ** 2 / d) / (np.sqrt(d) * (1.0 + 2j * w * var_b_prime))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)

CF_CUTOFF = 1e-12
HEAD_PANELS = 4000
MAX_REFINE = 7
_CHUNK = 1 << 20


def _cutoff(cf, scale):
    """Smallest probed t with |cf(t/scale)|/t < CF_CUTOFF at a few nearby points."""
    t = 1.0
    probe = np.array([1.0, 1.09, 1.23, 1.41, 1.66])
    while t < 1e18:
        tt = t * probe
        if np.all(np.abs(cf(tt / scale)) / tt < CF_CUTOFF):
            return t
        t *= 2.0
    raise NumericalFailure("characteristic function does not decay", t=t)


def _edges(t_end, h0, growth, cap, max_panels=None):
    """Panel edges on [0, t_end]: uniform h0, then geometric, then uniform cap.

    With ``max_panels`` the uniform stretches stop early, so the result may
    end before ``t_end``; callers truncate to that many panels anyway.
    """
    h0 = min(h0, cap)
    t1 = min(h0 / growth, t_end) if growth > 0 else t_end
    if max_panels is not None:
        t1 = min(t1, h0 * max_panels)
    parts = [np.arange(0.0, t1, h0)]
    t = max(t1, 0.0)
    if t < t_end and cap > h0:
        t2 = min(cap / growth, t_end)
        n = max(int(math.ceil(math.log(t2 / t) / math.log1p(growth))), 0) if t2 > t else 0
        geo = t * (1.0 + growth) ** np.arange(n)
        parts.append(geo[geo < t2])
        t = t2
    if t < t_end:
        stop = t_end if max_panels is None else min(t_end, t + cap * max_panels)
        parts.append(np.arange(t, stop, cap))
        if stop < t_end:
            return np.unique(np.concatenate(parts + [[stop]]))
    return np.unique(np.concatenate(parts + [[t_end]]))


def _panel_sum(f, edges):
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    total = 0.0
    step = max(1, _CHUNK // _GL_X.size)
    for i in range(0, a.size, step):
        nodes = mid[i:i + step, None] + half[i:i + step, None] * _GL_X
        vals = f(nodes) @ _GL_W
        total += float(np.dot(vals, half[i:i + step]))
    return total


def gil_pelaez_cdf(point: float, cf: Callable, scale: float = 1.0, rtol: float = 1e-6,
                   atol: float = 1e-13) -> float:
    """CDF at ``point`` from the characteristic function ``cf``.

    ``F(x) = 1/2 - (1/pi) int_0^inf Im[exp(-1j w x) cf(w)] / w dw``

    ``scale`` is a typical magnitude of the variable (``max(|mean|, std)``
    works); the integral runs in ``t = w * scale``. The range stops where
    ``|cf|/t`` drops below 1e-12. Gauss-Legendre panels start uniform, grow
    geometrically and are capped at a quarter period of ``exp(-1j w x)``.
    When the range would need more than a few thousand panels, the
    remaining non-oscillatory-envelope tail is handled as a Fourier integral
    (QUADPACK QAWF). Panels are halved until two successive CDF values agree
    to ``max(atol, rtol * F)``.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    y = float(point) / scale

    def f(t):
        return np.imag(np.exp(-1j * t * y) * cf(t / scale)) / t

    t_max = _cutoff(cf, scale)
    cap = 0.5 * PI / abs(y) if y != 0 else math.inf
    h0, growth = 0.5, 0.1
    edges = _edges(t_max, h0, growth, cap, max_panels=HEAD_PANELS + 1)
    t_head = t_max
    if edges.size > HEAD_PANELS + 1:
        t_head = float(edges[HEAD_PANELS])

    tail = 0.0
    if t_head < t_max:
        tail = _fourier_tail(cf, scale, y, t_head, atol)

    prev = None
    for level in range(MAX_REFINE):
        div = 2.0 ** level
        edges = _edges(t_head, h0 / div, growth / div, cap / div)
        value = 0.5 - (_panel_sum(f, edges) + tail) / PI
        if prev is not None and abs(value - prev) <= max(atol, rtol * abs(value)):
            return min(1.0, max(0.0, value))
        prev = value
    raise NumericalFailure("Gil-Pelaez quadrature did not converge", point=point, last=prev,
                           panels=edges.size - 1, t_head=t_head, t_max=t_max)


def _fourier_tail(cf, scale, y, t0, atol):
    """int_{t0}^inf Im[exp(-1j t y) cf(t/scale)] / t dt."""
    re = lambda t: float(np.real(cf(t / scale))) / t  # noqa: E731
    im = lambda t: float(np.imag(cf(t / scale))) / t  # noqa: E731
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if y == 0.0:
            val, err = integrate.quad(im, t0, np.inf, epsabs=atol, limit=500)
        else:
            wy = abs(y)
            c, ec = integrate.quad(im, t0, np.inf, weight="cos", wvar=wy, epsabs=atol, limlst=200)
            s, es = integrate.quad(re, t0, np.inf, weight="sin", wvar=wy, epsabs=atol, limlst=200)
            val = c - math.copysign(1.0, y) * s
            err = ec + es
    if not math.isfinite(val) or err > max(1e3 * atol, 1e-9):
        raise NumericalFailure("oscillatory tail did not converge", t0=t0, estimate=val, error=err)
    return val


# -- outage ------------------------------------------------------------------

def outage_probability(n_useful: int, n_interfering: int, sigma2_h: float, sigma2_g: float,
                       r: float, noise_over_power: float) -> float:
    """``Pr[SINR < r]`` for a user owning ``n_useful`` elements while
    ``n_interfering`` elements serve others.

    Everything is normalized by ``sigma2_h * sigma2_g`` before inversion.
    """
    if r <= 0:
        return 0.0
    c = sigma2_h * sigma2_g
    mu = n_useful * PRODUCT_MEAN
    va = n_useful * PRODUCT_VAR
    vbp = 0.5 * r * n_interfering
    x = r * noise_over_power / c
    scale = mu * mu + va + 2.0 * vbp
    return gil_pelaez_cdf(x, lambda w: upsilon_cf(w, mu, va, vbp), scale=scale)


def noma_outage(scenario, k: int, pt_dbm: Optional[float] = None, rate: Optional[float] = None) -> float:
    """Theoretical outage of user ``k`` (0-based) in the partitioned scheme."""
    pt_dbm = scenario.pt_dbm if pt_dbm is None else pt_dbm
    rate = scenario.qos_rate_bps_hz if rate is None else rate
    lb = scenario.link_budget()
    pt = 10.0 ** (pt_dbm / 10.0)
    q = outage_query(rate, scenario.bandwidth, pt, lb.n0_linear)
    n_k = scenario.partition_sizes[k]
    return outage_probability(n_k, scenario.n_elements - n_k, lb.sigma2_h, lb.sigma2_g[k],
                              q.r_k, lb.n0_linear / pt)


# -- Gamma fitting -----------------------------------------------------------

@dataclass(frozen=True)
class GammaFit:
    kappa: float
    rho: float

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and math.isfinite(self.rho) and self.kappa > 0 and self.rho > 0):
            raise ValueError(f"invalid Gamma parameters kappa={self.kappa}, rho={self.rho}")

    @property
    def mean(self) -> float:
        return self.kappa * self.rho

    def cdf(self, x):
        return regularized_gamma_p(self.kappa, np.asarray(x, dtype=float) / self.rho)


def fit_gamma(samples, tol: float = 1e-10, min_samples: int = 100) -> GammaFit:
    """Maximum-likelihood (shape, scale) fit.

    Newton on ``log k - digamma(k) = log(mean) - mean(log x)``, started at the
    method-of-moments shape and kept inside a shrinking bracket.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {x.size}")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise ValueError("samples must be finite and strictly positive")
    mean = x.mean()
    var = x.var()
    s = math.log(mean) - float(np.mean(np.log(x)))
    if var <= 0 or s <= 0:
        raise DegenerateInputError("samples have zero spread")

    k = mean * mean / var
    lo, hi = 0.0, math.inf
    for _ in range(200):
        resid = math.log(k) - special.digamma(k) - s
        if resid > 0:
            lo = k
        else:
            hi = k
        deriv = 1.0 / k - special.polygamma(1, k)
        k_new = k - resid / deriv
        if not lo < k_new < hi:
            k_new = 0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * k
        if abs(k_new - k) <= tol * k:
            k = k_new
            break
        k = k_new
    else:
        raise NumericalFailure("Gamma shape iteration did not converge", kappa=k)
    return GammaFit(float(k), float(mean / k))


def ks_statistic(samples, cdf: Callable) -> float:
    """One-sample Kolmogorov-Smirnov distance against ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    n = x.size
    F = np.asarray(cdf(x), dtype=np.float64)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


# -- error probabilities -----------------------------------------------------

def gamma_mgf(s, fit: GammaFit):
    """``E[exp(s X)] = (1 - rho s)^(-kappa)`` for ``s < 1/rho``."""
    s_arr = np.asarray(s, dtype=np.float64)
    if np.any(s_arr * fit.rho >= 1.0):
        raise ValueError(f"MGF undefined for s >= 1/rho = {1.0 / fit.rho}")
    out = np.exp(-fit.kappa * np.log1p(-fit.rho * s_arr))
    return float(out) if out.ndim == 0 else out


def sep_mpsk(fit: GammaFit, order: int, rtol: float = 1e-8) -> float:
    """Average M-PSK symbol error probability under Gamma-distributed SNR.

    ``(1/pi) int_0^{(M-1)pi/M} MGF(-sin^2(pi/M) / sin^2 x) dx``
    """
    if order < 2:
        raise ValueError(f"order must be >= 2, got {order}")
    g = math.sin(PI / order) ** 2
    upper = (order - 1) * PI / order

    def integrand(x):
        sx = math.sin(x)
        if sx == 0.0:
            return 0.0
        return gamma_mgf(-g / (sx * sx), fit)

    # the integrand peaks at x = pi/2; splitting there helps QUADPACK
    pts = [0.0, min(PI / 2, upper), upper]
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b > a:
            val, _ = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=rtol * 1e-2, limit=200)
            total += val
    return total / PI


def bep_from_sep(sep: float, order: int) -> float:
    if not 0.0 <= sep <= 1.0:
        raise ValueError(f"sep must lie in [0, 1], got {sep}")
    return sep / math.log2(order)


def bep_mpsk(fit: GammaFit, order: int) -> float:
    return bep_from_sep(sep_mpsk(fit, order), order)

"""Closed-form privacy curves for property queries.

Subsampling (and its lambda = 1 special case, no mechanism at all) has an
exact finite-sum curve under the binomial model. Laplace noise gets the
bound eps = 1/(psi*n) with delta = 0; Gaussian noise gets a normal
approximation of the binomial. The differential-privacy baselines are the
worst-case curves of the bare noise at shift ``s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .curve import MixtureDist, delta_mixture
from .distributions import ContinuousKernel, log_comb, std_normal_cdf
from .query import PropertyQuery, sample_size

__all__ = [
    "PURE_EPS_REGIME",
    "ThresholdIndices",
    "thresholds",
    "delta_subsample_analytic",
    "delta_pure_analytic",
    "laplace_stat_epsilon",
    "delta_gaussian_approx",
    "dp_gaussian_baseline",
    "dp_laplace_baseline",
    "dp_laplace_closed_form",
    "dp_subsample_amplify",
    "shannon_entropy",
]

# the pure-case sums were derived for eps up to ln 2
PURE_EPS_REGIME = math.log(2.0)


@dataclass(frozen=True)
class ThresholdIndices:
    """Outcome thresholds where the subsampled likelihood ratio crosses e^eps.

    ``c_plus`` / ``c_minus`` are the unclamped relative offsets from the
    expectation pi*m; ``j_plus`` / ``j_minus`` use the clamped offsets and
    therefore stay inside [0, m]. ``plus_empty`` / ``minus_empty`` record
    that the clamp was active, i.e. no outcome reaches the ratio e^eps.
    """

    j_plus_star: float
    j_minus_star: float
    c_plus_star: float
    c_minus_star: float
    c_plus_clamped: float
    c_minus_clamped: float
    m: int
    lam: float

    # with lam = 1 the extreme outcomes have infinite ratio, so the sums
    # are never empty there
    @property
    def plus_empty(self) -> bool:
        return self.lam < 1.0 and self.c_plus_star > self.c_plus_clamped

    @property
    def minus_empty(self) -> bool:
        return self.lam < 1.0 and self.c_minus_star > self.c_minus_clamped


def thresholds(q: PropertyQuery, lam, eps: float) -> ThresholdIndices:
    if eps < 0:
        raise ValueError("epsilon must be >= 0")
    m = sample_size(q.n, lam)
    lam_f = m / q.n
    xi = q.xi
    ee = math.exp(eps)
    c_plus = math.expm1(eps) / (1.0 + ee * xi) / lam_f
    c_minus = -math.expm1(-eps) / (1.0 + xi / ee) / lam_f
    cp2 = min(c_plus, 1.0 / q.pi - 1.0)
    cm2 = min(c_minus, 1.0)
    return ThresholdIndices(
        j_plus_star=(1.0 + cp2) * q.pi * m,
        j_minus_star=(1.0 - cm2) * q.pi * m,
        c_plus_star=c_plus,
        c_minus_star=c_minus,
        c_plus_clamped=cp2,
        c_minus_clamped=cm2,
        m=m,
        lam=lam_f,
    )


def _log_prefactor(j: np.ndarray, m: int, pi: float) -> np.ndarray:
    # pi^(j-1) (1-pi)^(m-j-1) C(m-1, j)
    return (j - 1) * math.log(pi) + (m - j - 1) * math.log1p(-pi) + log_comb(m - 1, j)


def _boundary_plus(m: int, lam: float, pi: float, ee: float) -> float:
    # p_plus(m) - e^eps p_minus(m); the bracketed summand is singular here
    return lam * pi ** (m - 1) + (1.0 - lam) * pi**m - ee * (1.0 - lam) * pi**m


def _boundary_minus(m: int, lam: float, pi: float, ee: float) -> float:
    return (1.0 - lam) * pi**m - ee * (lam * pi ** (m - 1) + (1.0 - lam) * pi**m)


def _sum_terms(log_pref: np.ndarray, bracket: np.ndarray) -> float:
    """sum exp(log_pref) * bracket with the sign carried by ``bracket``."""
    if log_pref.size == 0:
        return 0.0
    with np.errstate(divide="ignore"):
        logs = log_pref + np.log(np.abs(bracket))
    top = np.max(logs)
    if not np.isfinite(top):
        return 0.0
    return math.exp(top) * math.fsum(np.sign(bracket) * np.exp(logs - top))


def _subsample_sums(q: PropertyQuery, m: int, lam: float, eps: float,
                    th: ThresholdIndices) -> tuple[float, float]:
    pi = q.pi
    ee = math.exp(eps)
    omee = -math.expm1(eps)  # 1 - e^eps

    if th.plus_empty:
        d_plus = 0.0
    else:
        lo = max(0, math.ceil(th.j_plus_star))
        j = np.arange(lo, m, dtype=float)
        frac = j * (1.0 - pi) / (m - j)
        bracket = lam * (frac - ee * pi) + (1.0 - lam) * omee * m * pi * (1.0 - pi) / (m - j)
        d_plus = _sum_terms(_log_prefactor(j, m, pi), bracket)
        if lo <= m:
            d_plus += _boundary_plus(m, lam, pi, ee)

    if th.minus_empty:
        d_minus = 0.0
    else:
        hi = min(m, math.floor(th.j_minus_star))
        j = np.arange(0, min(hi, m - 1) + 1, dtype=float)
        frac = j * (1.0 - pi) / (m - j)
        bracket = lam * (pi - ee * frac) + (1.0 - lam) * omee * m * pi * (1.0 - pi) / (m - j)
        d_minus = _sum_terms(_log_prefactor(j, m, pi), bracket)
        if hi >= m:
            d_minus += _boundary_minus(m, lam, pi, ee)

    return min(1.0, max(0.0, d_plus)), min(1.0, max(0.0, d_minus))


def delta_subsample_analytic(q: PropertyQuery, lam, eps: float) -> tuple[float, float]:
    """(delta_plus, delta_minus) of subsampling m = lam*n entries, as finite sums.

    The curve itself is the max of the two.
    """
    th = thresholds(q, lam, eps)
    return _subsample_sums(q, th.m, th.m / q.n, eps, th)


def delta_pure_analytic(q: PropertyQuery, eps: float) -> tuple[float, float]:
    """(delta_plus, delta_minus) with no mechanism: the full-sample case.

    The derivation assumed eps <= ln 2 (``PURE_EPS_REGIME``); beyond it the
    sums are still evaluated, and agree with the brute-force oracle.
    """
    if eps < 0:
        raise ValueError("epsilon must be >= 0")
    n, pi, xi = q.n, q.pi, q.xi
    ee = math.exp(eps)
    j_plus = (1.0 + math.expm1(eps) / (1.0 + ee * xi)) * pi * n
    j_minus = (1.0 - (-math.expm1(-eps)) / (1.0 + xi / ee)) * pi * n

    j = np.arange(max(0, math.ceil(j_plus)), n, dtype=float)
    frac = j * (1.0 - pi) / (n - j)
    d_plus = _sum_terms(_log_prefactor(j, n, pi), frac - ee * pi)
    # j = n: only the plus side can produce the all-positive answer
    d_plus += pi ** (n - 1)

    j = np.arange(0, min(math.floor(j_minus), n - 1) + 1, dtype=float)
    frac = j * (1.0 - pi) / (n - j)
    d_minus = _sum_terms(_log_prefactor(j, n, pi), pi - ee * frac)
    return min(1.0, max(0.0, d_plus)), min(1.0, max(0.0, d_minus))


def laplace_stat_epsilon(q: PropertyQuery, psi: float) -> float:
    """Laplace noise of scale psi gives (1/(psi*n), 0) statistical privacy."""
    if not psi > 0:
        raise ValueError("psi must be positive")
    return 1.0 / (psi * q.n)


def delta_gaussian_approx(q: PropertyQuery, sigma_noise: float, eps: float) -> tuple[float, float]:
    """Normal approximation of the curve under Gaussian noise of std ``sigma_noise``.

    The binomial answer is replaced by a Gaussian with the same variance, so
    both conditionals are normals with common variance
    sigma^2 = sigma_noise^2 + pi(1-pi)(n-1)/n^2 and means 1/n apart.
    Approximate only; never an oracle.
    """
    if not sigma_noise > 0:
        raise ValueError("noise standard deviation must be positive")
    if eps < 0:
        raise ValueError("epsilon must be >= 0")
    n, pi = q.n, q.pi
    var = sigma_noise**2 + pi * (1.0 - pi) * (n - 1) / n**2
    sd = math.sqrt(var)
    mean_minus = pi * (1.0 - 1.0 / n)
    mean_plus = mean_minus + 1.0 / n
    x_hi = pi + n * var * eps + (0.5 - pi) / n
    x_lo = pi - n * var * eps + (0.5 - pi) / n
    ee = math.exp(eps)
    d_plus = std_normal_cdf((mean_plus - x_hi) / sd) - ee * std_normal_cdf((mean_minus - x_hi) / sd)
    d_minus = std_normal_cdf((x_lo - mean_minus) / sd) - ee * std_normal_cdf((x_lo - mean_plus) / sd)
    return max(0.0, d_plus), max(0.0, d_minus)


def dp_gaussian_baseline(s: float, sigma: float, eps: float) -> float:
    """Exact worst-case curve of N(0, sigma^2) against N(s, sigma^2)."""
    if not (s > 0 and sigma > 0):
        raise ValueError("sensitivity and sigma must be positive")
    if eps < 0:
        raise ValueError("epsilon must be >= 0")
    if math.isinf(eps):
        return 0.0
    a = s / (2.0 * sigma)
    b = eps * sigma / s
    val = std_normal_cdf(a - b) - math.exp(eps) * std_normal_cdf(-a - b)
    return max(0.0, val)


def dp_laplace_baseline(s: float, psi: float, eps: float, tol: float = 1e-9) -> float:
    """Worst-case curve of Lap(psi) at shift ``s``, by quadrature."""
    if not (s > 0 and psi > 0):
        raise ValueError("sensitivity and psi must be positive")
    if eps < 0:
        raise ValueError("epsilon must be >= 0")
    if eps >= s / psi:
        return 0.0
    kern = ContinuousKernel("laplace", psi)
    p = MixtureDist(kern, (Fraction(s),), np.zeros(1))
    q = MixtureDist(kern, (Fraction(0),), np.zeros(1))
    return delta_mixture(p, q, eps, tol)


def dp_laplace_closed_form(s: float, psi: float, eps: float) -> float:
    """1 - exp((eps - s/psi)/2) for eps < s/psi, else 0."""
    return max(0.0, -math.expm1(0.5 * (eps - s / psi)))


def dp_subsample_amplify(eps: float, delta: float, lam: float) -> tuple[float, float]:
    """Subsampling at rate lam maps (eps, delta)-DP to (ln(1 + lam(e^eps - 1)), lam*delta)."""
    if eps < 0 or delta < 0 or not 0 < lam <= 1:
        raise ValueError("need eps, delta >= 0 and 0 < lam <= 1")
    return math.log1p(lam * math.expm1(eps)), lam * delta


def shannon_entropy(pi: float) -> float:
    """Binary entropy in nats."""
    if not 0.0 < pi < 1.0:
        raise ValueError("pi must lie in (0, 1)")
    return -pi * math.log(pi) - (1.0 - pi) * math.log1p(-pi)

"""Primitive distributions: log-space binomial and hypergeometric pmfs,
Laplace/Gaussian kernels.

The binomial pmf uses Loader's saddle-point decomposition (``stirlerr`` and
``bd0``), which keeps the relative error of the pmf near machine precision
even for ``m`` in the millions, where a plain log-gamma difference loses
several digits to cancellation.

Throughout this package ``pi`` denotes a property probability. The circle
constant is spelled ``math.tau / 2`` or hidden in ``_LOG_TWO_TAU_HALF``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "ContinuousKernel",
    "log_binomial_pmf",
    "log_binomial_pmf_all",
    "log_comb",
    "log_hypergeometric_pmf",
    "log_hypergeometric_pmf_all",
    "kernel_density",
    "kernel_cdf",
    "kernel_sf",
    "std_normal_cdf",
]

# ln(2 * circle constant)
_LN_2PI = math.log(math.tau)
_LN_SQRT_2PI = 0.5 * _LN_2PI

# stirlerr(n) = ln(n!) - (n + 1/2) ln(n) + n - ln(sqrt(2 * circle const))
_STIRLERR_TABLE = np.array(
    [0.0]
    + [
        math.lgamma(k + 1.0) - (k + 0.5) * math.log(k) + k - _LN_SQRT_2PI
        for k in range(1, 16)
    ]
)
_S0 = 1.0 / 12
_S1 = 1.0 / 360
_S2 = 1.0 / 1260
_S3 = 1.0 / 1680
_S4 = 1.0 / 1188


def _stirlerr(n: np.ndarray) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    out = np.empty_like(n)
    small = n <= 15
    out[small] = _STIRLERR_TABLE[n[small].astype(int)]
    big = ~small
    if np.any(big):
        nb = n[big]
        nn = nb * nb
        r = np.where(
            nb > 500,
            (_S0 - _S1 / nn) / nb,
            np.where(
                nb > 80,
                (_S0 - (_S1 - _S2 / nn) / nn) / nb,
                np.where(
                    nb > 35,
                    (_S0 - (_S1 - (_S2 - _S3 / nn) / nn) / nn) / nb,
                    (_S0 - (_S1 - (_S2 - (_S3 - _S4 / nn) / nn) / nn) / nn) / nb,
                ),
            ),
        )
        out[big] = r
    return out


def _bd0(x: np.ndarray, npr: np.ndarray) -> np.ndarray:
    """Deviance term x ln(x/np) + np - x, stable when x is close to np."""
    x = np.asarray(x, dtype=float)
    npr = np.asarray(npr, dtype=float)
    x, npr = np.broadcast_arrays(x, npr)
    out = np.empty(x.shape)
    near = np.abs(x - npr) < 0.1 * (x + npr)
    far = ~near
    with np.errstate(divide="ignore", invalid="ignore"):
        out[far] = x[far] * np.log(x[far] / npr[far]) + npr[far] - x[far]
    if np.any(near):
        xn, pn = x[near], npr[near]
        v = (xn - pn) / (xn + pn)
        s = (xn - pn) * v
        ej = 2.0 * xn * v
        v2 = v * v
        for j in range(1, 200):
            ej = ej * v2
            s1 = s + ej / (2 * j + 1)
            if np.all(s1 == s):
                break
            s = s1
        out[near] = s
    return out


def _check_prob(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p!r}")


def log_binomial_pmf_all(m: int, p: float) -> np.ndarray:
    """Natural-log pmf of Binomial(m, p) on the whole support 0..m."""
    if m < 0:
        raise ValueError(f"number of draws must be >= 0, got {m}")
    _check_prob(p)
    q = 1.0 - p
    k = np.arange(m + 1, dtype=float)
    out = np.empty(m + 1)
    out[0] = m * math.log1p(-p)
    if m == 0:
        return out
    out[m] = m * math.log(p)
    if m >= 2:
        ki = k[1:m]
        lc = (
            _stirlerr(np.array([m]))[0]
            - _stirlerr(ki)
            - _stirlerr(m - ki)
            - _bd0(ki, m * p)
            - _bd0(m - ki, m * q)
        )
        lf = _LN_2PI + np.log(ki) + np.log1p(-ki / m)
        out[1:m] = lc - 0.5 * lf
    return out


def log_binomial_pmf(k: int, m: int, p: float) -> float:
    """ln P[X = k] for X ~ Binomial(m, p).

    >>> round(math.exp(log_binomial_pmf(2, 4, 0.5)), 12)
    0.375
    """
    if not 0 <= k <= m:
        raise ValueError(f"k={k} outside support [0, {m}]")
    _check_prob(p)
    if k == 0:
        return m * math.log1p(-p)
    if k == m:
        return m * math.log(p)
    ka = np.array([float(k)])
    lc = (
        _stirlerr(np.array([float(m)]))[0]
        - _stirlerr(ka)[0]
        - _stirlerr(np.array([float(m - k)]))[0]
        - _bd0(ka, m * p)[0]
        - _bd0(np.array([float(m - k)]), m * (1.0 - p))[0]
    )
    lf = _LN_2PI + math.log(k) + math.log1p(-k / m)
    return float(lc - 0.5 * lf)


def log_comb(n, k):
    """ln C(n, k) via log-gamma; vectorized, -inf outside 0 <= k <= n."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    with np.errstate(invalid="ignore"):
        val = special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)
    val = np.where((k < 0) | (k > n), -np.inf, val)
    return val if val.ndim else float(val)


def _hyper_support(m: int, K: int, n: int) -> tuple[int, int]:
    if not (0 <= m <= n and 0 <= K <= n):
        raise ValueError(f"invalid hypergeometric parameters m={m}, K={K}, n={n}")
    return max(0, m - (n - K)), min(m, K)


def log_hypergeometric_pmf(j: int, m: int, K: int, n: int) -> float:
    """ln P[J = j] when drawing m of n items without replacement, K marked."""
    lo, hi = _hyper_support(m, K, n)
    if not lo <= j <= hi:
        raise ValueError(f"j={j} outside support [{lo}, {hi}]")
    return float(log_comb(K, j) + log_comb(n - K, m - j) - log_comb(n, m))


def log_hypergeometric_pmf_all(m: int, K: int, n: int) -> np.ndarray:
    """Log pmf on 0..m; entries outside the support are -inf."""
    _hyper_support(m, K, n)
    j = np.arange(m + 1)
    return log_comb(K, j) + log_comb(n - K, m - j) - log_comb(n, m)


@dataclass(frozen=True)
class ContinuousKernel:
    """Zero-mean symmetric noise density.

    ``scale`` is the Laplace scaling factor (variance 2 scale**2) or the
    Gaussian standard deviation.
    """

    kind: str
    scale: float

    def __post_init__(self):
        if self.kind not in ("laplace", "gaussian"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"kernel scale must be positive and finite, got {self.scale!r}")

    @property
    def variance(self) -> float:
        if self.kind == "laplace":
            return 2.0 * self.scale**2
        return self.scale**2

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        b = self.scale
        if self.kind == "laplace":
            return -np.abs(x) / b - math.log(2.0 * b)
        return -0.5 * (x / b) ** 2 - math.log(b) - _LN_SQRT_2PI

    def density(self, x):
        return np.exp(self.log_density(x))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        b = self.scale
        if self.kind == "laplace":
            return np.where(x < 0, 0.5 * np.exp(np.minimum(x, 0.0) / b),
                            1.0 - 0.5 * np.exp(-np.maximum(x, 0.0) / b))
        return special.ndtr(x / b)

    def sf(self, x):
        """Upper tail P[N > x], accurate far into the right tail."""
        return self.cdf(-np.asarray(x, dtype=float))

    def tail_reach(self, floor: float = 1e-18) -> float:
        """Distance from the center beyond which the density is below ``floor``."""
        b = self.scale
        if self.kind == "laplace":
            return b * max(40.0, math.log(1.0 / (2.0 * b * floor)))
        arg = math.log(1.0 / (floor * b)) - _LN_SQRT_2PI
        return b * max(9.0, math.sqrt(2.0 * max(arg, 0.0)))


def kernel_density(kern: ContinuousKernel, x: float) -> float:
    return float(kern.density(x))


def kernel_cdf(kern: ContinuousKernel, x: float) -> float:
    return float(kern.cdf(x))


def kernel_sf(kern: ContinuousKernel, x: float) -> float:
    return float(kern.sf(x))


def std_normal_cdf(x):
    """Standard normal CDF (Cody's rational approximation via ``scipy.special.ndtr``)."""
    out = special.ndtr(x)
    return float(out) if np.ndim(out) == 0 else out

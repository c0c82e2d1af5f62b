"""Conditional output distributions of a property query.

A property query returns the fraction of entries with some property; every
entry has it independently with probability ``pi``. Fixing the critical
entry to positive (``plus``) or negative (``minus``) leaves n - 1 free
entries, so the exact answer is (1 + B)/n or B/n with B ~ Binomial(n-1, pi).
Mechanisms act on top of that: subsampling answers from a uniform sample of
m = lambda*n entries, additive noise convolves the answer with a kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .curve import DiscreteDist, MixtureDist
from .distributions import (
    ContinuousKernel,
    log_binomial_pmf_all,
    log_hypergeometric_pmf_all,
)

__all__ = [
    "PropertyQuery",
    "Pure",
    "Subsample",
    "Laplace",
    "Gaussian",
    "Mechanism",
    "ConditionalPair",
    "pure_pair",
    "subsample_pair",
    "subsample_pair_fixed",
    "noisy_pair",
    "pair_for",
    "ratio_Q_plus",
    "ratio_Q_minus",
    "sample_size",
    "nearest_valid_lambda",
]


@dataclass(frozen=True)
class PropertyQuery:
    """Database size ``n`` and per-entry property probability ``pi``."""

    n: int
    pi: float

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 2:
            raise ValueError(f"database size must be an integer >= 2, got {self.n!r}")
        if not 0.0 < self.pi < 1.0:
            raise ValueError(f"property probability must lie in (0, 1), got {self.pi!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "pi", float(self.pi))

    @property
    def xi(self) -> float:
        return self.pi / (1.0 - self.pi)

    @property
    def sensitivity(self) -> float:
        return 1.0 / self.n


@dataclass(frozen=True)
class Pure:
    name = "pure"


@dataclass(frozen=True)
class Subsample:
    """Sampling without replacement at rate ``lam``; canonical form is ``m``."""

    m: int
    name = "subsample"

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"sample size must be a positive integer, got {self.m!r}")

    def rate(self, n: int) -> Fraction:
        return Fraction(self.m, n)


@dataclass(frozen=True)
class Laplace:
    psi: float
    name = "laplace"

    def __post_init__(self):
        ContinuousKernel("laplace", self.psi)

    @property
    def kernel(self) -> ContinuousKernel:
        return ContinuousKernel("laplace", self.psi)


@dataclass(frozen=True)
class Gaussian:
    sigma: float
    name = "gaussian"

    def __post_init__(self):
        ContinuousKernel("gaussian", self.sigma)

    @property
    def kernel(self) -> ContinuousKernel:
        return ContinuousKernel("gaussian", self.sigma)


Mechanism = Union[Pure, Subsample, Laplace, Gaussian]


@dataclass(frozen=True, eq=False)
class ConditionalPair:
    """Output laws given the critical entry is positive (plus) / negative (minus)."""

    plus: Union[DiscreteDist, MixtureDist]
    minus: Union[DiscreteDist, MixtureDist]

    def __post_init__(self):
        if type(self.plus) is not type(self.minus):
            raise TypeError("both sides must use the same representation")
        if isinstance(self.plus, MixtureDist) and self.plus.kernel != self.minus.kernel:
            raise ValueError("both mixtures must share one kernel")

    def swapped(self) -> "ConditionalPair":
        return ConditionalPair(self.minus, self.plus)


def sample_size(n: int, lam) -> int:
    """m = lam * n, rejecting rates that do not give an integral sample."""
    lam_f = Fraction(lam) if not isinstance(lam, float) else Fraction(lam).limit_denominator(10 * n)
    if isinstance(lam, float) and abs(float(lam_f) - lam) > 1e-12:
        raise ValueError(f"lambda={lam} * n={n} is not an integer; try {nearest_valid_lambda(n, lam)}")
    m = lam_f * n
    if m.denominator != 1:
        raise ValueError(f"lambda={lam} * n={n} is not an integer; try {nearest_valid_lambda(n, lam)}")
    m = int(m)
    if not 1 <= m <= n:
        raise ValueError(f"sample size m={m} outside [1, {n}]")
    return m


def nearest_valid_lambda(n: int, lam: float) -> float:
    m = min(n, max(1, round(float(lam) * n)))
    return m / n


def pure_pair(q: PropertyQuery) -> ConditionalPair:
    """Exact answer laws: plus atoms at j/n for j in 1..n, minus at j/n for j in 0..n-1."""
    n = q.n
    lb = log_binomial_pmf_all(n - 1, q.pi)
    plus = DiscreteDist(tuple(Fraction(j, n) for j in range(1, n + 1)), lb)
    minus = DiscreteDist(tuple(Fraction(j, n) for j in range(0, n)), lb)
    return ConditionalPair(plus, minus)


def _subsample_log_masses(m: int, lam: float, pi: float):
    # plus : lam * Bin(m-1) shifted by one + (1-lam) * Bin(m)
    # minus: lam * Bin(m-1)                 + (1-lam) * Bin(m)
    lb_m = log_binomial_pmf_all(m, pi)
    shifted = np.full(m + 1, -np.inf)
    unshifted = np.full(m + 1, -np.inf)
    lb_m1 = log_binomial_pmf_all(m - 1, pi) if m >= 1 else np.zeros(0)
    shifted[1:] = lb_m1
    unshifted[:m] = lb_m1
    if lam >= 1.0:
        return shifted, unshifted
    ll, lr = math.log(lam), math.log1p(-lam)
    plus = np.logaddexp(ll + shifted, lr + lb_m)
    minus = np.logaddexp(ll + unshifted, lr + lb_m)
    return plus, minus


def _drop_empty(locs, log_mass) -> DiscreteDist:
    keep = np.isfinite(log_mass)
    return DiscreteDist(tuple(v for v, k in zip(locs, keep) if k), log_mass[keep])


def subsample_pair(q: PropertyQuery, lam) -> ConditionalPair:
    """Binomial model of subsampling m = lam*n entries; atoms at j/m."""
    m = sample_size(q.n, lam)
    plus, minus = _subsample_log_masses(m, m / q.n, q.pi)
    locs = tuple(Fraction(j, m) for j in range(m + 1))
    return ConditionalPair(_drop_empty(locs, plus), _drop_empty(locs, minus))


def subsample_pair_fixed(n: int, positives: int, m: int) -> ConditionalPair:
    """Subsampling from a fixed database whose other n-1 entries hold ``positives``.

    This is the hypergeometric case: the answer law when the adversary knows
    the remaining entries, used to report how far the binomial model is off.
    """
    if not 0 <= positives <= n - 1:
        raise ValueError("positives must lie in [0, n-1]")
    if not 1 <= m <= n:
        raise ValueError("sample size must lie in [1, n]")
    lam = m / n
    # critical entry drawn (prob lam): remaining m-1 drawn from the n-1 others
    h_drawn = log_hypergeometric_pmf_all(m - 1, positives, n - 1)
    h_not = log_hypergeometric_pmf_all(m, positives, n - 1) if m <= n - 1 else np.full(m + 1, -np.inf)
    shifted = np.full(m + 1, -np.inf)
    unshifted = np.full(m + 1, -np.inf)
    shifted[1:] = h_drawn
    unshifted[:m] = h_drawn
    with np.errstate(divide="ignore"):
        ll = math.log(lam)
        lr = math.log1p(-lam) if lam < 1 else -np.inf
    plus = np.logaddexp(ll + shifted, lr + h_not)
    minus = np.logaddexp(ll + unshifted, lr + h_not)
    locs = tuple(Fraction(j, m) for j in range(m + 1))
    return ConditionalPair(_drop_empty(locs, plus), _drop_empty(locs, minus))


def noisy_pair(q: PropertyQuery, kern: ContinuousKernel) -> ConditionalPair:
    """Exact answer plus independent kernel noise: mixtures over the pure atoms."""
    base = pure_pair(q)
    return ConditionalPair(MixtureDist.from_discrete(base.plus, kern),
                           MixtureDist.from_discrete(base.minus, kern))


def pair_for(q: PropertyQuery, mech: Mechanism) -> ConditionalPair:
    if isinstance(mech, Pure):
        return pure_pair(q)
    if isinstance(mech, Subsample):
        return subsample_pair(q, Fraction(mech.m, q.n))
    if isinstance(mech, (Laplace, Gaussian)):
        return noisy_pair(q, mech.kernel)
    raise TypeError(f"unknown mechanism {mech!r}")


def ratio_Q_plus(q: PropertyQuery, lam, j: float) -> float:
    """Likelihood ratio plus/minus of the subsampled answer at j/m.

    (lam*j + (1-lam)*m*pi) / (lam*(m-j)*xi + (1-lam)*m*pi); +inf at j = m
    when lam = 1. ``j`` may be fractional (interpolated ratio).
    """
    m = sample_size(q.n, lam)
    lam_f = m / q.n
    if not 0 <= j <= m:
        raise ValueError(f"j={j} outside [0, {m}]")
    num = lam_f * j + (1.0 - lam_f) * m * q.pi
    den = lam_f * (m - j) * q.xi + (1.0 - lam_f) * m * q.pi
    if den == 0.0:
        return math.inf
    return num / den


def ratio_Q_minus(q: PropertyQuery, lam, j: float) -> float:
    r = ratio_Q_plus(q, lam, j)
    if r == 0.0:
        return math.inf
    return 0.0 if math.isinf(r) else 1.0 / r

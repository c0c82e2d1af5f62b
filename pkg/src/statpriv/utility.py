"""Utility loss (mean squared deviation) of the mechanisms and
utility-matched noise calibration."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .distributions import ContinuousKernel
from .query import Gaussian, Laplace, Mechanism, PropertyQuery, Pure, Subsample, sample_size

__all__ = [
    "UtilityReport",
    "ul_subsample",
    "ul_additive",
    "utility_report",
    "match_noise_to_subsample",
    "matched_laplace_epsilon",
    "enumerate_subsample_loss",
    "simulate_additive_loss",
]


@dataclass(frozen=True)
class UtilityReport:
    mechanism: Mechanism
    ul: float
    ul_stat: float


def ul_subsample(q: PropertyQuery, lam) -> float:
    """pi(1-pi)(1/m - 1/n) for a without-replacement sample of m = lam*n."""
    m = sample_size(q.n, lam)
    return q.pi * (1.0 - q.pi) * (1.0 / m - 1.0 / q.n)


def ul_additive(kern: ContinuousKernel) -> float:
    """Zero-mean independent noise costs exactly its variance."""
    return kern.variance


def utility_report(q: PropertyQuery, mech: Mechanism) -> UtilityReport:
    if isinstance(mech, Pure):
        ul = 0.0
    elif isinstance(mech, Subsample):
        ul = ul_subsample(q, Fraction(mech.m, q.n))
    elif isinstance(mech, (Laplace, Gaussian)):
        ul = ul_additive(mech.kernel)
    else:
        raise TypeError(f"unknown mechanism {mech!r}")
    # UL and UL_STAT coincide for all of these mechanisms
    return UtilityReport(mech, ul, ul)


def match_noise_to_subsample(q: PropertyQuery, lam, kind: str) -> ContinuousKernel:
    """Noise kernel whose variance equals the subsampling utility loss."""
    m = sample_size(q.n, lam)
    if m == q.n:
        raise ValueError("lambda = 1 has zero utility loss; there is no noise to match")
    loss = ul_subsample(q, Fraction(m, q.n))
    if kind == "laplace":
        return ContinuousKernel("laplace", math.sqrt(loss / 2.0))
    if kind == "gaussian":
        return ContinuousKernel("gaussian", math.sqrt(loss))
    raise ValueError(f"unknown noise kind {kind!r}")


def matched_laplace_epsilon(q: PropertyQuery, lam) -> float:
    """Pure-privacy epsilon of the utility-matched Laplace mechanism (delta = 0).

    sqrt(2/(pi(1-pi))) * sqrt(lam/(n-m)), i.e. 1/(psi*n) at the matched psi.
    """
    m = sample_size(q.n, lam)
    lam_f = m / q.n
    return math.sqrt(2.0 / (q.pi * (1.0 - q.pi))) * math.sqrt(lam_f / (q.n - m))


def enumerate_subsample_loss(n: int, m: int, pi) -> dict:
    """Exact moments by enumerating every database and every m-subset.

    Returns Fractions for UL = E[(Y_samp - Y)^2], UL_STAT = MSE(Y_samp) - MSE(Y),
    Cov(Y, Y_samp) and Var(Y). ``pi`` should be a Fraction for exact results.
    Exponential in n; intended for n <= 12.
    """
    if n > 16:
        raise ValueError("enumeration is only tractable for small n")
    pi = Fraction(pi)
    subsets = list(itertools.combinations(range(n), m))
    w_sub = Fraction(1, len(subsets))
    ul = mse_samp = mse_full = cross = Fraction(0)
    for db in itertools.product((0, 1), repeat=n):
        k = sum(db)
        w_db = pi**k * (1 - pi) ** (n - k)
        y = Fraction(k, n)
        mse_full += w_db * (y - pi) ** 2
        for sub in subsets:
            ys = Fraction(sum(db[i] for i in sub), m)
            w = w_db * w_sub
            ul += w * (ys - y) ** 2
            mse_samp += w * (ys - pi) ** 2
            cross += w * (y - pi) * (ys - pi)
    return {
        "ul": ul,
        "ul_stat": mse_samp - mse_full,
        "cov": cross,
        "var": mse_full,
    }


def simulate_additive_loss(q: PropertyQuery, kern: ContinuousKernel, draws: int = 1_000_000,
                           seed: Optional[int] = 0) -> tuple[float, float]:
    """Monte-Carlo estimate of E[(Y + N - Y)^2] with its standard error.

    The database is drawn too, so the estimate covers the full expectation
    over the database distribution.
    """
    rng = np.random.default_rng(seed)
    y = rng.binomial(q.n, q.pi, size=draws) / q.n
    if kern.kind == "laplace":
        noise = rng.laplace(0.0, kern.scale, size=draws)
    else:
        noise = rng.normal(0.0, kern.scale, size=draws)
    sq = ((y + noise) - y) ** 2
    return float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(draws))

"""Mechanism-agnostic privacy curves from a pair of output distributions.

For distributions P, Q on a common output space the curve is

    delta(eps) = sup_S P(S) - e^eps Q(S) = integral of max(0, p(z) - e^eps q(z)),

the hockey-stick divergence. Discrete pairs are summed atom by atom in log
space; mixtures of shifted Laplace/Gaussian kernels are integrated with the
adaptive Gauss-Kronrod scheme in :mod:`statpriv.quadrature`. Nothing here
knows about property queries, which makes these routines the reference the
closed forms are checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

from .distributions import ContinuousKernel
from .quadrature import QuadResult, integrate

__all__ = [
    "DiscreteDist",
    "MixtureDist",
    "PrivacyCurve",
    "DEFAULT_EPS_GRID",
    "default_eps_grid",
    "privacy_loss",
    "delta_discrete",
    "delta_mixture",
    "delta_mixture_estimate",
    "delta",
    "curve",
    "total_variation",
    "coarsen",
    "mix",
]

NORMALIZATION_TOL = 1e-10
# mixture components lighter than this are skipped during integration
_NEGLIGIBLE_WEIGHT = 1e-20


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Rational):
        return Fraction(x)
    return Fraction(x) if isinstance(x, str) else Fraction(float(x))


def _check_normalized(log_mass: np.ndarray, what: str) -> None:
    total = math.exp(logsumexp(log_mass)) if log_mass.size else 0.0
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise ValueError(f"{what} sum to {total!r}, expected 1")


@dataclass(frozen=True, eq=False)
class DiscreteDist:
    """Finite distribution with exact rational atom locations and log masses."""

    locations: tuple
    log_mass: np.ndarray

    def __post_init__(self):
        locs = tuple(_as_fraction(x) for x in self.locations)
        lm = np.asarray(self.log_mass, dtype=float).copy()
        if len(locs) != lm.size:
            raise ValueError("locations and masses differ in length")
        if any(b <= a for a, b in zip(locs, locs[1:])):
            raise ValueError("atom locations must be strictly increasing")
        if np.any(lm > 1e-12):
            raise ValueError("log masses must be <= 0")
        _check_normalized(lm, "atom masses")
        lm.setflags(write=False)
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "log_mass", lm)

    @classmethod
    def from_masses(cls, atoms: dict) -> "DiscreteDist":
        """Build from ``{location: probability}``; zero masses are dropped."""
        items = sorted((_as_fraction(k), float(v)) for k, v in atoms.items() if v > 0)
        with np.errstate(divide="ignore"):
            return cls(tuple(k for k, _ in items), np.log([v for _, v in items]))

    @property
    def x(self) -> np.ndarray:
        return np.array([float(v) for v in self.locations])

    @property
    def mass(self) -> np.ndarray:
        return np.exp(self.log_mass)

    def mean(self) -> float:
        return float(np.dot(self.x, self.mass))

    def variance(self) -> float:
        mu = self.mean()
        return float(np.dot((self.x - mu) ** 2, self.mass))

    def mass_at(self, loc) -> float:
        loc = _as_fraction(loc)
        try:
            return float(math.exp(self.log_mass[self.locations.index(loc)]))
        except ValueError:
            return 0.0

    def reflect(self, about=Fraction(1)) -> "DiscreteDist":
        """Distribution of ``about - X``."""
        about = _as_fraction(about)
        return DiscreteDist(tuple(about - v for v in reversed(self.locations)),
                            self.log_mass[::-1])


@dataclass(frozen=True, eq=False)
class MixtureDist:
    """Finite mixture sum_k w_k * kernel(z - shift_k)."""

    kernel: ContinuousKernel
    shifts: tuple
    log_weight: np.ndarray

    def __post_init__(self):
        shifts = tuple(_as_fraction(s) for s in self.shifts)
        lw = np.asarray(self.log_weight, dtype=float).copy()
        if len(shifts) != lw.size:
            raise ValueError("shifts and weights differ in length")
        _check_normalized(lw, "mixture weights")
        lw.setflags(write=False)
        object.__setattr__(self, "shifts", shifts)
        object.__setattr__(self, "log_weight", lw)

    @classmethod
    def from_discrete(cls, base: DiscreteDist, kernel: ContinuousKernel) -> "MixtureDist":
        return cls(kernel, base.locations, base.log_mass)

    @property
    def x(self) -> np.ndarray:
        return np.array([float(v) for v in self.shifts])

    def mean(self) -> float:
        return float(np.dot(self.x, np.exp(self.log_weight)))

    def density(self, z, *, min_weight: float = 0.0) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        keep = self.log_weight > (math.log(min_weight) if min_weight > 0 else -np.inf)
        s = self.x[keep]
        w = np.exp(self.log_weight[keep])
        out = np.empty(z.shape)
        # bound the size of the (points x components) work array
        step = max(1, 4_000_000 // max(1, s.size))
        for lo in range(0, z.size, step):
            zz = z[lo:lo + step]
            out[lo:lo + step] = self.kernel.density(zz[:, None] - s[None, :]) @ w
        return out


@dataclass(frozen=True)
class PrivacyCurve:
    """Sampled eps -> delta map; ``provenance`` is analytic, oracle or dp-baseline."""

    epsilons: tuple
    deltas: tuple
    provenance: str = "oracle"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.provenance not in ("analytic", "oracle", "dp-baseline", "approximate"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if len(self.epsilons) != len(self.deltas):
            raise ValueError("epsilon and delta sequences differ in length")

    @property
    def points(self) -> list:
        return list(zip(self.epsilons, self.deltas))

    def __call__(self, eps: float) -> float:
        """Linear interpolation between grid points (no extrapolation)."""
        return float(np.interp(eps, self.epsilons, self.deltas))


def default_eps_grid(num: int = 200, lo: float = 1e-4, hi: float = 5.0) -> list:
    """``num`` log-spaced values in [lo, hi] preceded by 0."""
    return [0.0] + list(np.geomspace(lo, hi, num))


DEFAULT_EPS_GRID = tuple(default_eps_grid())


def _aligned(p: DiscreteDist, q: DiscreteDist):
    union = sorted(set(p.locations) | set(q.locations))
    index = {loc: i for i, loc in enumerate(union)}
    lp = np.full(len(union), -np.inf)
    lq = np.full(len(union), -np.inf)
    lp[[index[v] for v in p.locations]] = p.log_mass
    lq[[index[v] for v in q.locations]] = q.log_mass
    return union, lp, lq


def privacy_loss(p: DiscreteDist, q: DiscreteDist) -> tuple[list, np.ndarray]:
    """Atom-wise PLRV ln(p/q) on the union support.

    ln(>0/0) = +inf and ln(0/0) = 0.
    """
    union, lp, lq = _aligned(p, q)
    with np.errstate(invalid="ignore"):
        loss = lp - lq
    loss[np.isneginf(lp) & np.isneginf(lq)] = 0.0
    return union, loss


def _check_eps(eps: float) -> None:
    if not eps >= 0:
        raise ValueError(f"epsilon must be >= 0, got {eps!r}")


def delta_discrete(p: DiscreteDist, q: DiscreteDist, eps: float) -> float:
    """sum_z max(0, p(z) - e^eps q(z)), evaluated in log space."""
    _check_eps(eps)
    _, lp, lq = _aligned(p, q)
    pos = lp > lq + eps
    if not np.any(pos):
        return 0.0
    lp, lq = lp[pos], lq[pos]
    # p - e^eps q = p * (1 - exp(eps + lq - lp)); the factor is in (0, 1]
    with np.errstate(divide="ignore"):
        terms = lp + np.log(-np.expm1(eps + lq - lp))
    return float(min(1.0, math.exp(logsumexp(terms))))


def _mixture_breakpoints(p: MixtureDist, q: MixtureDist) -> np.ndarray:
    shifts = []
    for d in (p, q):
        keep = np.exp(d.log_weight) > _NEGLIGIBLE_WEIGHT
        shifts.append(d.x[keep])
    s = np.unique(np.concatenate(shifts))
    reach = p.kernel.tail_reach()
    return np.concatenate([[s[0] - reach], s, [s[-1] + reach]])


def delta_mixture_estimate(p: MixtureDist, q: MixtureDist, eps: float,
                           tol: float = 1e-9) -> QuadResult:
    """Quadrature of max(0, p - e^eps q) with the integrator's error estimate."""
    _check_eps(eps)
    if p.kernel != q.kernel:
        raise ValueError("mixtures must share the same kernel")
    scale = math.exp(eps)

    def integrand(z):
        diff = (p.density(z, min_weight=_NEGLIGIBLE_WEIGHT)
                - scale * q.density(z, min_weight=_NEGLIGIBLE_WEIGHT))
        return np.maximum(diff, 0.0)

    return integrate(integrand, _mixture_breakpoints(p, q), tol=tol)


def delta_mixture(p: MixtureDist, q: MixtureDist, eps: float, tol: float = 1e-9) -> float:
    res = delta_mixture_estimate(p, q, eps, tol)
    return float(min(1.0, max(0.0, res.value)))


def delta(p, q, eps: float, tol: float = 1e-9) -> float:
    """Dispatch on the representation of the pair."""
    if isinstance(p, DiscreteDist) and isinstance(q, DiscreteDist):
        return delta_discrete(p, q, eps)
    if isinstance(p, MixtureDist) and isinstance(q, MixtureDist):
        return delta_mixture(p, q, eps, tol)
    raise TypeError("both distributions must be discrete or both mixtures")


def curve(p, q, eps_grid: Iterable[float] = DEFAULT_EPS_GRID, tol: float = 1e-9,
          workers: int = 1) -> PrivacyCurve:
    """Symmetrized curve eps -> max(delta(p, q, eps), delta(q, p, eps))."""
    grid = [float(e) for e in eps_grid]
    if any(e < 0 for e in grid):
        raise ValueError("epsilon grid must be nonnegative")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("epsilon grid must be sorted ascending")

    def point(e):
        return max(delta(p, q, e, tol), delta(q, p, e, tol))

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as pool:
            values = list(pool.map(point, grid))
    else:
        values = [point(e) for e in grid]
    return PrivacyCurve(tuple(grid), tuple(values), "oracle")


def total_variation(p, q) -> float:
    """Half-L1 distance by direct summation or quadrature, independent of ``delta``."""
    if isinstance(p, DiscreteDist):
        _, lp, lq = _aligned(p, q)
        return 0.5 * float(np.abs(np.exp(lp) - np.exp(lq)).sum())

    def integrand(z):
        return 0.5 * np.abs(p.density(z) - q.density(z))

    return integrate(integrand, _mixture_breakpoints(p, q)).value


def coarsen(p: DiscreteDist, partition: Sequence) -> DiscreteDist:
    """Merge atoms into buckets [b_i, b_{i+1}); the last bucket is closed.

    Each bucket is represented by its left boundary.
    """
    edges = [_as_fraction(b) for b in partition]
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError("partition must contain at least two increasing boundaries")
    buckets: dict[int, list] = {}
    for loc, lm in zip(p.locations, p.log_mass):
        if loc < edges[0] or loc > edges[-1]:
            raise ValueError(f"atom at {loc} is not covered by the partition")
        i = next(k for k in range(len(edges) - 1)
                 if edges[k] <= loc < edges[k + 1] or (k == len(edges) - 2 and loc == edges[-1]))
        buckets.setdefault(i, []).append(lm)
    locs = tuple(edges[i] for i in sorted(buckets))
    return DiscreteDist(locs, np.array([logsumexp(buckets[i]) for i in sorted(buckets)]))


def mix(weight: float, first: DiscreteDist, second: DiscreteDist) -> DiscreteDist:
    """weight * first + (1 - weight) * second."""
    if not 0.0 <= weight <= 1.0:
        raise ValueError("mixing weight must lie in [0, 1]")
    union, l1, l2 = _aligned(first, second)
    with np.errstate(divide="ignore"):
        lw, lv = math.log(weight) if weight else -np.inf, math.log1p(-weight) if weight < 1 else -np.inf
    lm = np.logaddexp(l1 + lw, l2 + lv)
    keep = np.isfinite(lm)
    return DiscreteDist(tuple(v for v, k in zip(union, keep) if k), lm[keep])

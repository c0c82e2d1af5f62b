"""Datasets behind the DP-vs-statistical-privacy and mechanism comparisons.

Every runner returns a list of :class:`DataSeries`; nothing here touches the
filesystem. Points whose quadrature fails are left out of the series and
listed under ``meta["gaps"]`` instead of leaking NaNs.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .analytic import (
    delta_pure_analytic,
    delta_subsample_analytic,
    dp_gaussian_baseline,
    dp_laplace_baseline,
    dp_subsample_amplify,
)
from .curve import delta_mixture
from .distributions import ContinuousKernel
from .quadrature import QuadratureError
from .query import PropertyQuery, noisy_pair, sample_size
from .utility import match_noise_to_subsample, ul_subsample

logger = logging.getLogger(__name__)

__all__ = [
    "DataSeries",
    "ExperimentPreset",
    "PRESETS",
    "DEFAULT_NU_GRID",
    "sp_delta_noise",
    "dp_delta_noise",
    "run_dp_vs_sp_noise",
    "run_delta_vs_pi",
    "run_equal_utility_comparison",
    "run_lambda_sweep",
    "run_amplification_check",
    "run_small_n",
    "run_preset",
]

# nu from 1 to 10 in steps of 0.5
DEFAULT_NU_GRID = tuple(float(v) for v in np.arange(1.0, 10.0 + 1e-9, 0.5))
FIG_PI_LIST = (0.5, 0.1, 0.01)
# 0.01 plus 0.025 .. 0.5
PI_GRID = (0.01,) + tuple(round(v, 6) for v in np.linspace(0.025, 0.5, 20))


@dataclass
class DataSeries:
    label: str
    x: list
    y: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError(f"series {self.label!r}: x and y differ in length")
        if any(b <= a for a, b in zip(self.x, self.x[1:])):
            raise ValueError(f"series {self.label!r}: x must be strictly increasing")


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(v) for v in items]


def _guarded(fn: Callable[[float], float]) -> Callable[[float], float]:
    def wrapped(v):
        try:
            return fn(v)
        except QuadratureError as exc:
            logger.warning("quadrature failed at %r: %s", v, exc)
            return math.nan
    return wrapped


def _series(label: str, xs: Sequence[float], ys: Sequence[float], meta: dict) -> DataSeries:
    meta = dict(meta)
    gaps = [x for x, y in zip(xs, ys) if not math.isfinite(y)]
    if gaps:
        meta["gaps"] = gaps
    pts = [(x, y) for x, y in zip(xs, ys) if math.isfinite(y)]
    return DataSeries(label, [p[0] for p in pts], [p[1] for p in pts], meta)


def sp_delta_noise(q: PropertyQuery, kern: ContinuousKernel, eps: float, tol: float = 1e-9) -> float:
    """Statistical-privacy delta of additive noise (both directions)."""
    pair = noisy_pair(q, kern)
    return max(delta_mixture(pair.plus, pair.minus, eps, tol),
               delta_mixture(pair.minus, pair.plus, eps, tol))


def dp_delta_noise(kind: str, s: float, scale: float, eps: float) -> float:
    if kind == "gaussian":
        return dp_gaussian_baseline(s, scale, eps)
    return dp_laplace_baseline(s, scale, eps)


def run_dp_vs_sp_noise(kind: str, n: int = 1000, eps: float = 0.01,
                       pi_list: Sequence[float] = FIG_PI_LIST,
                       nu_range: Sequence[float] = DEFAULT_NU_GRID,
                       workers: int = 1) -> list:
    """delta_DP, delta_SP and their ratio against the noise level nu (scale = nu/n)."""
    if min(nu_range) < 1 or max(nu_range) > 10:
        raise ValueError("noise levels must lie in [1, 10]")
    s = 1.0 / n
    nus = sorted(float(v) for v in nu_range)
    meta = {"kind": kind, "n": n, "eps": eps, "x": "nu"}
    dp = _map(lambda nu: dp_delta_noise(kind, s, nu * s, eps), nus, workers)
    out = [_series(f"{kind}_dp", nus, dp, meta)]
    for pi in pi_list:
        q = PropertyQuery(n, pi)
        sp = _map(_guarded(lambda nu: sp_delta_noise(q, ContinuousKernel(kind, nu * s), eps)),
                  nus, workers)
        m = dict(meta, pi=pi)
        out.append(_series(f"{kind}_sp_pi={pi}", nus, sp, m))
        ratio = [d / v if v > 0 else math.inf for d, v in zip(dp, sp)]
        out.append(_series(f"{kind}_ratio_pi={pi}", nus, ratio, m))
    return out


def run_delta_vs_pi(kind: str, n: int = 1000, eps: float = 0.01,
                    pi_grid: Sequence[float] = PI_GRID, nu_list: Sequence[float] = (1.0, 3.0),
                    workers: int = 1) -> list:
    """delta_SP against pi for fixed noise levels, with the (pi-free) DP level echoed."""
    s = 1.0 / n
    pis = sorted(float(p) for p in pi_grid)
    out = []
    for nu in nu_list:
        kern = ContinuousKernel(kind, nu * s)
        meta = {"kind": kind, "n": n, "eps": eps, "nu": nu, "x": "pi"}
        sp = _map(_guarded(lambda pi: sp_delta_noise(PropertyQuery(n, pi), kern, eps)), pis, workers)
        out.append(_series(f"{kind}_sp_nu={nu:g}", pis, sp, meta))
        dp = dp_delta_noise(kind, s, nu * s, eps)
        out.append(_series(f"{kind}_dp_nu={nu:g}", pis, [dp] * len(pis), meta))
    return out


def _matched_deltas(q: PropertyQuery, lam, eps: float) -> dict:
    sub = max(delta_subsample_analytic(q, lam, eps))
    out = {"subsample": sub}
    for kind in ("gaussian", "laplace"):
        kern = match_noise_to_subsample(q, lam, kind)
        try:
            out[kind] = sp_delta_noise(q, kern, eps)
        except QuadratureError as exc:
            logger.warning("quadrature failed for %s at %r: %s", kind, q, exc)
            out[kind] = math.nan
    return out


def run_equal_utility_comparison(n: int = 1000, eps: float = 0.01, lam=Fraction(1, 10),
                                 pi_grid: Sequence[float] = PI_GRID, workers: int = 1) -> list:
    """Subsampling vs utility-matched Gaussian and Laplace noise, against pi."""
    m = sample_size(n, lam)
    pis = sorted(float(p) for p in pi_grid)
    rows = _map(lambda pi: _matched_deltas(PropertyQuery(n, pi), Fraction(m, n), eps), pis, workers)
    meta = {"n": n, "eps": eps, "lambda": m / n, "m": m, "x": "pi"}
    out = [_series(k, pis, [r[k] for r in rows], dict(meta, mechanism=k))
           for k in ("subsample", "gaussian", "laplace")]
    out.append(_series("utility_loss", pis,
                       [ul_subsample(PropertyQuery(n, pi), Fraction(m, n)) for pi in pis], meta))
    return out


def run_lambda_sweep(n: int = 1000, eps: float = 0.01, pi_list: Sequence[float] = (0.5, 0.1),
                     lambda_grid: Sequence = None, workers: int = 1) -> list:
    """The three equal-loss mechanisms against the sampling rate."""
    if lambda_grid is None:
        lambda_grid = default_lambda_grid(n)
    ms = sorted({sample_size(n, lam) for lam in lambda_grid})
    if ms and ms[-1] == n:
        raise ValueError("lambda = 1 has no matched noise; drop it from the sweep")
    lams = [m / n for m in ms]
    out = []
    for pi in pi_list:
        q = PropertyQuery(n, pi)
        rows = _map(lambda m: _matched_deltas(q, Fraction(m, n), eps), ms, workers)
        meta = {"n": n, "eps": eps, "pi": pi, "x": "lambda"}
        for k in ("subsample", "gaussian", "laplace"):
            out.append(_series(f"{k}_pi={pi}", lams, [r[k] for r in rows], dict(meta, mechanism=k)))
    return out


def default_lambda_grid(n: int) -> list:
    rates = (0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    return [Fraction(round(r * n), n) for r in rates if round(r * n) >= 1]


def run_amplification_check(n: int = 1000, pi: float = 0.5, eps: float = 0.1,
                            lambda_grid: Sequence = None, workers: int = 1) -> list:
    """Subsampled delta at the DP-amplified epsilon versus lambda * pure delta of size m.

    Series A: delta of subsampling m = lambda*n at eps' = ln(1 + lambda(e^eps - 1)).
    Series B: lambda * (pure delta of a size-m database at eps).
    Whether A <= B everywhere is an open question; the verdict lands in meta.
    """
    if lambda_grid is None:
        lambda_grid = [Fraction(k, 100) for k in (2, 5, 10, 15, 20, 30, 40, 50, 60, 70, 80, 90, 100)]
    ms = sorted({sample_size(n, lam) for lam in lambda_grid})
    lams = [m / n for m in ms]
    q = PropertyQuery(n, pi)

    def a_point(m):
        e2, _ = dp_subsample_amplify(eps, 0.0, m / n)
        return max(delta_subsample_analytic(q, Fraction(m, n), e2))

    def b_point(m):
        if m < 2:
            return math.nan
        return (m / n) * max(delta_pure_analytic(PropertyQuery(m, pi), eps))

    a = _map(a_point, ms, workers)
    b = _map(b_point, ms, workers)
    meta = {"n": n, "pi": pi, "eps": eps, "x": "lambda"}
    holds = all(x <= y for x, y in zip(a, b) if math.isfinite(y))
    eps_prime = [dp_subsample_amplify(eps, 0.0, lam)[0] for lam in lams]
    return [
        _series("subsample_at_amplified_eps", lams, a, dict(meta, a_le_b=holds)),
        _series("lambda_times_pure_size_m", lams, b, dict(meta, a_le_b=holds)),
        _series("amplified_eps", lams, eps_prime, meta),
    ]


def run_small_n(n: int = 100, eps: float = 0.01, pi_list: Sequence[float] = FIG_PI_LIST,
                nu_range: Sequence[float] = DEFAULT_NU_GRID, workers: int = 1) -> list:
    """DP/SP comparison for a small database; noise still scales with s = 1/n."""
    return (run_dp_vs_sp_noise("gaussian", n, eps, pi_list, nu_range, workers)
            + run_dp_vs_sp_noise("laplace", n, eps, pi_list, nu_range, workers))


@dataclass(frozen=True)
class ExperimentPreset:
    id: str
    description: str
    runner: Callable[..., list]
    parameters: dict

    def run(self, workers: int = 1) -> list:
        series = self.runner(workers=workers, **self.parameters)
        for s in series:
            s.meta.setdefault("preset", self.id)
        return series


def _conjecture(workers: int = 1, n: int = 1000, pi_list=(0.5, 0.1), eps_list=(0.1, 0.01)) -> list:
    out = []
    for pi in pi_list:
        for eps in eps_list:
            for s in run_amplification_check(n, pi, eps, workers=workers):
                s.label = f"{s.label}_pi={pi}_eps={eps}"
                out.append(s)
    return out


PRESETS = {
    "fig1": ExperimentPreset(
        "fig1", "Gaussian noise: SP delta against pi for nu in {1, 3}, with DP level",
        run_delta_vs_pi, {"kind": "gaussian", "n": 1000, "eps": 0.01,
                          "pi_grid": PI_GRID, "nu_list": (1.0, 3.0)}),
    "fig2": ExperimentPreset(
        "fig2", "Gaussian noise: DP/SP delta ratio against nu",
        run_dp_vs_sp_noise, {"kind": "gaussian", "n": 1000, "eps": 0.01,
                             "pi_list": FIG_PI_LIST, "nu_range": DEFAULT_NU_GRID}),
    "fig3": ExperimentPreset(
        "fig3", "Laplace noise: SP delta against pi for nu in {1, 3}, with DP level",
        run_delta_vs_pi, {"kind": "laplace", "n": 1000, "eps": 0.01,
                          "pi_grid": PI_GRID, "nu_list": (1.0, 3.0)}),
    "fig4": ExperimentPreset(
        "fig4", "Laplace noise: DP/SP delta ratio against nu",
        run_dp_vs_sp_noise, {"kind": "laplace", "n": 1000, "eps": 0.01,
                             "pi_list": FIG_PI_LIST, "nu_range": DEFAULT_NU_GRID}),
    "fig5": ExperimentPreset(
        "fig5", "Subsampling at the amplified epsilon vs lambda * pure delta of size m",
        run_amplification_check, {"n": 1000, "pi": 0.5, "eps": 0.1}),
    "fig6": ExperimentPreset(
        "fig6", "Equal-utility mechanisms against the sampling rate",
        run_lambda_sweep, {"n": 1000, "eps": 0.01, "pi_list": (0.5, 0.1)}),
    "equal-utility": ExperimentPreset(
        "equal-utility", "Equal-utility mechanisms against pi at lambda = 0.1",
        run_equal_utility_comparison, {"n": 1000, "eps": 0.01, "lam": Fraction(1, 10),
                                       "pi_grid": PI_GRID}),
    "small-n": ExperimentPreset(
        "small-n", "DP/SP delta ratio against nu for n = 100",
        run_small_n, {"n": 100, "eps": 0.01, "pi_list": FIG_PI_LIST,
                      "nu_range": DEFAULT_NU_GRID}),
    "conjecture": ExperimentPreset(
        "conjecture", "Amplification comparison over several pi and eps (exploratory)",
        _conjecture, {"n": 1000, "pi_list": (0.5, 0.1), "eps_list": (0.1, 0.01)}),
}


def run_preset(preset_id: str, workers: int = 1) -> list:
    try:
        preset = PRESETS[preset_id]
    except KeyError:
        raise KeyError(f"unknown preset {preset_id!r}; choose from {sorted(PRESETS)}") from None
    return preset.run(workers=workers)

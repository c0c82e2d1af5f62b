"""Acceptance criteria, each at its stated tolerance.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from statpriv.analytic import (
    delta_gaussian_approx,
    delta_pure_analytic,
    delta_subsample_analytic,
    dp_gaussian_baseline,
    laplace_stat_epsilon,
)
from statpriv.curve import DEFAULT_EPS_GRID, DiscreteDist, coarsen, curve, delta, delta_discrete, total_variation
from statpriv.distributions import ContinuousKernel
from statpriv.experiments import (
    DEFAULT_NU_GRID,
    PI_GRID,
    run_dp_vs_sp_noise,
    run_equal_utility_comparison,
    sp_delta_noise,
)
from statpriv.query import PropertyQuery, noisy_pair, subsample_pair
from statpriv.utility import enumerate_subsample_loss, simulate_additive_loss


@pytest.mark.criterion(1, "dp-gaussian values")
def test_c1_dp_gaussian_values(criterion):
    t0 = time.perf_counter()
    d1 = dp_gaussian_baseline(1e-3, 1e-3, 0.01)
    d3 = dp_gaussian_baseline(1e-3, 3e-3, 0.01)
    dt = time.perf_counter() - t0
    ok = abs(d1 - 0.38) <= 0.005 and abs(d3 - 0.128) <= 0.002 and dt < 0.1
    criterion.check(ok, f"nu=1: {d1:.5f}, nu=3: {d3:.5f}, {dt * 1e3:.2f} ms")


@pytest.mark.criterion(2, "subsampling oracle grid")
def test_c2_subsample_oracle_equivalence(criterion):
    t0 = time.perf_counter()
    worst, where = 0.0, None
    for n in (10, 50, 200):
        for pi in (0.01, 0.1, 0.5):
            q = PropertyQuery(n, pi)
            for lam in (Fraction(1, 10), Fraction(1, 2), Fraction(1)):
                pair = subsample_pair(q, lam)
                for eps in (0.0, 0.01, 0.1, math.log(2)):
                    a = delta_subsample_analytic(q, lam, eps)
                    o = (delta_discrete(pair.plus, pair.minus, eps), delta_discrete(pair.minus, pair.plus, eps))
                    d = max(abs(a[0] - o[0]), abs(a[1] - o[1]))
                    if d > worst:
                        worst, where = d, (n, pi, str(lam), eps)
    dt = time.perf_counter() - t0
    criterion.check(worst <= 1e-9 and dt < 10, f"max |analytic - oracle| = {worst:.2e} at {where}, {dt:.2f} s")


@pytest.mark.criterion(3, "lambda=1 equals pure")
def test_c3_pure_specialization(criterion):
    mismatches = 0
    total = 0
    for n in (10, 100, 1000):
        for pi in (0.1, 0.5):
            q = PropertyQuery(n, pi)
            for eps in DEFAULT_EPS_GRID:
                total += 1
                mismatches += delta_subsample_analytic(q, 1, eps) != delta_pure_analytic(q, eps)
    criterion.check(mismatches == 0, f"{total - mismatches}/{total} points bitwise equal")


@pytest.mark.criterion(4, "Laplace bound and tightness")
def test_c4_laplace_bound(criterion):
    q = PropertyQuery(1000, 0.5)
    psi = 0.1
    pair = noisy_pair(q, ContinuousKernel("laplace", psi))
    eps = laplace_stat_epsilon(q, psi)
    at = max(delta(pair.plus, pair.minus, eps), delta(pair.minus, pair.plus, eps))
    below = delta(pair.plus, pair.minus, eps - 1e-3)
    # independent witness: the plus side puts more than e^eps times the mass on [1, inf)
    kern = ContinuousKernel("laplace", psi)
    mass = lambda d: float(np.exp(d.log_weight) @ kern.sf(1.0 - d.x))
    witness = mass(pair.plus) - math.exp(eps - 1e-3) * mass(pair.minus)
    ok = at <= 1e-12 and below > 0 and witness > 0
    criterion.check(ok, f"delta(1/(psi n)) = {at:.1e}, delta(1/(psi n) - 1e-3) = {below:.3e}, "
                        f"witness [1, inf) = {witness:.3e}")


def _gauss_gap(n, pi, nu, eps=0.01):
    q = PropertyQuery(n, pi)
    sn = nu / n
    ref = sp_delta_noise(q, ContinuousKernel("gaussian", sn), eps)
    approx = max(delta_gaussian_approx(q, sn, eps))
    return abs(approx - ref), ref


@pytest.mark.criterion(5, "Gaussian approximation")
def test_c5_gaussian_approximation(criterion):
    rel = {nu: _gauss_gap(1000, 0.5, nu)[0] / _gauss_gap(1000, 0.5, nu)[1] for nu in (1, 3)}
    gaps = {nu: [_gauss_gap(n, 0.5, nu)[0] for n in (200, 500, 1000, 2000)] for nu in (1, 3)}
    shrinking = all(all(b < a for a, b in zip(g, g[1:])) for g in gaps.values())
    ok = all(r <= 0.05 for r in rel.values()) and shrinking
    detail = ", ".join(f"nu={nu}: rel {rel[nu]:.1e}, |gap| over n " + " > ".join(f"{v:.1e}" for v in gaps[nu])
                       for nu in (1, 3))
    criterion.check(ok, detail)


@pytest.mark.criterion(6, "utility by enumeration and simulation")
def test_c6_utility(criterion):
    worst = Fraction(0)
    for m in (2, 3):
        for pi in (Fraction(1, 4), Fraction(1, 2)):
            ul = enumerate_subsample_loss(6, m, pi)["ul"]
            worst = max(worst, abs(ul - pi * (1 - pi) * (Fraction(1, m) - Fraction(1, 6))))
    z = {}
    for kind, scale in (("laplace", 0.02), ("gaussian", 0.02)):
        kern = ContinuousKernel(kind, scale)
        mean, se = simulate_additive_loss(PropertyQuery(100, 0.5), kern, draws=1_000_000, seed=2024)
        z[kind] = abs(mean - kern.variance) / se
    ok = float(worst) <= 1e-12 and all(v <= 3 for v in z.values())
    criterion.check(ok, f"enumeration max error {float(worst):.1e}; MC |z| laplace {z['laplace']:.2f}, "
                        f"gaussian {z['gaussian']:.2f}")


@pytest.fixture(scope="module")
def equal_utility():
    return {s.label: s for s in run_equal_utility_comparison(1000, 0.01, Fraction(1, 10), PI_GRID, workers=4)}


@pytest.mark.criterion(7, "DP/SP ratio > 1")
def test_c7_ratio_above_one(criterion):
    lows = {}
    for kind in ("gaussian", "laplace"):
        series = {s.label: s for s in run_dp_vs_sp_noise(kind, 1000, 0.01, (0.5, 0.1, 0.01),
                                                         DEFAULT_NU_GRID, workers=4)}
        for pi in (0.5, 0.1, 0.01):
            s = series[f"{kind}_ratio_pi={pi}"]
            assert len(s.x) == len(DEFAULT_NU_GRID)
            lows[(kind, pi)] = min(s.y)
    worst = min(lows, key=lows.get)
    criterion.check(lows[worst] > 1, f"min ratio {lows[worst]:.4f} at {worst[0]}, pi={worst[1]}")


@pytest.mark.criterion(7, "Gaussian ~ subsampling within 10%")
def test_c7_gaussian_matches_subsampling(criterion, equal_utility):
    g, s = equal_utility["gaussian"].y, equal_utility["subsample"].y
    rel = [abs(a - b) / b for a, b in zip(g, s)]
    criterion.check(max(rel) <= 0.10, f"max |G - S|/S = {max(rel):.3f} over {len(rel)} pi values")


@pytest.mark.criterion(7, "Laplace 15-25% above Gaussian")
def test_c7_laplace_about_twenty_percent(criterion, equal_utility):
    pis = equal_utility["laplace"].x
    excess = [l / g - 1 for l, g in zip(equal_utility["laplace"].y, equal_utility["gaussian"].y)]
    bad = [(p, e) for p, e in zip(pis, excess) if not 0.15 <= e <= 0.25]
    criterion.check(not bad, f"excess {min(excess):.0%}..{max(excess):.0%}; "
                             f"{len(bad)}/{len(pis)} pi values outside [15%, 25%]")


def _random_pairs(rng, count=40):
    for _ in range(count):
        k = int(rng.integers(2, 9))
        locs = [Fraction(i, k) for i in range(k)]
        yield (DiscreteDist(locs, np.log(rng.dirichlet(np.ones(k)))),
               DiscreteDist(locs, np.log(rng.dirichlet(np.ones(k)))))
    for n, pi, lam in ((30, 0.2, Fraction(1, 3)), (200, 0.01, Fraction(1, 10)), (100, 0.5, 1)):
        pair = subsample_pair(PropertyQuery(n, pi), lam)
        yield pair.plus, pair.minus


@pytest.mark.criterion(8, "property suites")
def test_c8_properties(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    grid = [0.0, 1e-3, 0.01, 0.05, 0.1, 0.3, math.log(2), 1.0, 2.0]
    mono = tv = post = 0.0
    for p, q in _random_pairs(rng):
        c = curve(p, q, grid)
        mono = max(mono, max(b - a for a, b in zip(c.deltas, c.deltas[1:])))
        tv = max(tv, abs(c.deltas[0] - total_variation(p, q)))
        locs = sorted(set(p.locations) | set(q.locations))
        for _ in range(3):
            cuts = sorted(set(rng.choice(len(locs), size=int(rng.integers(1, len(locs) + 1)))) | {0})
            edges = [locs[i] for i in cuts] + [locs[-1] + 1]
            cc = curve(coarsen(p, edges), coarsen(q, edges), grid)
            post = max(post, max(a - b for a, b in zip(cc.deltas, c.deltas)))
    # mixtures too: the noisy pairs
    for kind in ("gaussian", "laplace"):
        pair = noisy_pair(PropertyQuery(200, 0.3), ContinuousKernel(kind, 2 / 200))
        c = curve(pair.plus, pair.minus, grid)
        mono = max(mono, max(b - a for a, b in zip(c.deltas, c.deltas[1:])))
        tv = max(tv, abs(c.deltas[0] - total_variation(pair.plus, pair.minus)))
    sym = 0.0
    for n, lam in ((50, 1), (200, Fraction(1, 10)), (1000, Fraction(1, 2))):
        for pi in (0.01, 0.1, 0.3):
            a = subsample_pair(PropertyQuery(n, pi), lam)
            b = subsample_pair(PropertyQuery(n, 1 - pi), lam)
            ca, cb = curve(a.plus, a.minus, grid), curve(b.plus, b.minus, grid)
            sym = max(sym, max(abs(x - y) for x, y in zip(ca.deltas, cb.deltas)))
    for pi in (0.1, 0.3):
        a = noisy_pair(PropertyQuery(100, pi), ContinuousKernel("gaussian", 0.02))
        b = noisy_pair(PropertyQuery(100, 1 - pi), ContinuousKernel("gaussian", 0.02))
        ca, cb = curve(a.plus, a.minus, [0.0, 0.01, 0.1]), curve(b.plus, b.minus, [0.0, 0.01, 0.1])
        sym = max(sym, max(abs(x - y) for x, y in zip(ca.deltas, cb.deltas)))
    dt = time.perf_counter() - t0
    ok = mono <= 0 and tv <= 1e-9 and post <= 1e-15 and sym <= 1e-10 and dt < 120
    criterion.check(ok, f"max increase {mono:.1e}, |delta(0) - TV| {tv:.1e}, coarsening excess {post:.1e}, "
                        f"pi symmetry {sym:.1e}, {dt:.1f} s")

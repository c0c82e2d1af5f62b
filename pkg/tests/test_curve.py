import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sint

from statpriv.analytic import delta_pure_analytic
from statpriv.curve import (
    DEFAULT_EPS_GRID,
    DiscreteDist,
    MixtureDist,
    PrivacyCurve,
    coarsen,
    curve,
    delta,
    delta_discrete,
    delta_mixture,
    delta_mixture_estimate,
    mix,
    privacy_loss,
    total_variation,
)
from statpriv.distributions import ContinuousKernel
from statpriv.query import PropertyQuery, pure_pair
from statpriv.quadrature import QuadratureError


def bern(p):
    return DiscreteDist.from_masses({0: 1 - p, 1: p})


def point(x):
    return DiscreteDist.from_masses({x: 1.0})


def single(kind, scale, shift=0):
    return MixtureDist(ContinuousKernel(kind, scale), (Fraction(shift),), np.zeros(1))


def sup_over_sets(p: DiscreteDist, q: DiscreteDist, eps: float) -> float:
    """max over every subset S of the union support of P(S) - e^eps Q(S)."""
    support = sorted(set(p.locations) | set(q.locations))
    best = 0.0
    for r in range(len(support) + 1):
        for s in itertools.combinations(support, r):
            best = max(best, sum(p.mass_at(z) for z in s) - math.exp(eps) * sum(q.mass_at(z) for z in s))
    return best


class TestDiscreteDist:
    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            DiscreteDist((Fraction(1), Fraction(0)), np.log([0.5, 0.5]))

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            DiscreteDist((Fraction(0), Fraction(1)), np.log([0.5, 0.6]))

    def test_moments(self):
        d = bern(0.25)
        assert d.mean() == pytest.approx(0.25)
        assert d.variance() == pytest.approx(0.1875)

    def test_reflect(self):
        d = DiscreteDist.from_masses({Fraction(1, 4): 0.3, Fraction(1, 2): 0.7}).reflect()
        assert d.locations == (Fraction(1, 2), Fraction(3, 4))
        assert d.mass_at(Fraction(3, 4)) == pytest.approx(0.3)


class TestDeltaDiscrete:
    def test_identical(self):
        d = bern(0.3)
        assert delta_discrete(d, d, 0.0) == 0.0

    def test_disjoint(self):
        assert delta_discrete(point(0), point(1), 5.0) == 1.0

    def test_bernoulli_tv(self):
        assert delta_discrete(bern(0.75), bern(0.5), 0.0) == pytest.approx(0.25, abs=1e-15)

    def test_infinite_loss_atoms_keep_full_mass(self):
        p = DiscreteDist.from_masses({0: 0.5, 1: 0.5})
        q = DiscreteDist.from_masses({0: 1.0})
        for eps in (0.0, 1.0, 50.0):
            assert delta_discrete(p, q, eps) == pytest.approx(0.5)

    def test_negative_eps_rejected(self):
        with pytest.raises(ValueError):
            delta_discrete(bern(0.5), bern(0.5), -0.1)

    def test_plrv_conventions(self):
        p = DiscreteDist.from_masses({0: 0.5, 1: 0.5})
        q = DiscreteDist.from_masses({0: 0.25, 2: 0.75})
        locs, loss = privacy_loss(p, q)
        assert locs == [0, 1, 2]
        assert loss[0] == pytest.approx(math.log(2))
        assert loss[1] == math.inf
        assert loss[2] == -math.inf

    @pytest.mark.parametrize("eps", [0.0, 0.05, 0.3, 1.0])
    def test_matches_brute_force_sets(self, eps):
        rng = np.random.default_rng(7)
        for _ in range(10):
            a = rng.dirichlet(np.ones(6))
            b = rng.dirichlet(np.ones(6))
            p = DiscreteDist.from_masses(dict(enumerate(a)))
            q = DiscreteDist.from_masses(dict(enumerate(b)))
            assert delta_discrete(p, q, eps) == pytest.approx(sup_over_sets(p, q, eps), abs=1e-14)


class TestDeltaMixture:
    def test_identical_gaussians(self):
        g = single("gaussian", 1.0)
        assert delta_mixture(g, g, 0.3) == pytest.approx(0.0, abs=1e-12)

    def test_two_point_gaussian_closed_form(self):
        s, sig, eps = 1.0, 1.0, 0.01
        a, b = s / (2 * sig), eps * sig / s
        from scipy.stats import norm
        exact = norm.cdf(a - b) - math.exp(eps) * norm.cdf(-a - b)
        got = delta_mixture(single("gaussian", sig, s), single("gaussian", sig, 0), eps)
        assert exact == pytest.approx(0.3798, abs=1e-4)
        assert got == pytest.approx(exact, abs=1e-9)

    @pytest.mark.parametrize("eps", [1.0, 1.5, 3.0])
    def test_laplace_ratio_bound(self, eps):
        assert delta_mixture(single("laplace", 1.0, 1), single("laplace", 1.0, 0), eps) <= 1e-12

    def test_laplace_against_scipy_quad(self):
        p = MixtureDist(ContinuousKernel("laplace", 0.3), (Fraction(0), Fraction(1, 2)), np.log([0.4, 0.6]))
        q = MixtureDist(ContinuousKernel("laplace", 0.3), (Fraction(0), Fraction(1, 2)), np.log([0.6, 0.4]))
        eps = 0.1
        f = lambda z: max(0.0, p.density(z)[0] - math.exp(eps) * q.density(z)[0])
        ref = sum(sint.quad(f, a, b, epsabs=1e-13, limit=200)[0]
                  for a, b in [(-20, 0), (0, 0.25), (0.25, 0.5), (0.5, 20)])
        assert delta_mixture(p, q, eps) == pytest.approx(ref, abs=1e-9)

    def test_mixed_kernels_rejected(self):
        with pytest.raises(ValueError):
            delta_mixture(single("gaussian", 1.0), single("laplace", 1.0), 0.0)

    def test_mixed_representations_rejected(self):
        with pytest.raises(TypeError):
            delta(bern(0.5), single("gaussian", 1.0), 0.0)

    def test_failure_surfaces(self):
        # an impossibly tight tolerance cannot be met; it must raise, not return
        p, q = single("laplace", 1e-3, Fraction(1, 1000)), single("laplace", 1e-3, 0)
        with pytest.raises(QuadratureError):
            from statpriv.quadrature import integrate
            integrate(lambda z: np.maximum(p.density(z) - q.density(z), 0), [-1, 0, 1e-3, 1],
                      tol=1e-30, max_iter=3, fail_tol=1e-30)

    def test_tolerance_halving_self_check(self):
        q = PropertyQuery(200, 0.3)
        pair = pure_pair(q)
        kern = ContinuousKernel("gaussian", 2.0 / q.n)
        p = MixtureDist.from_discrete(pair.plus, kern)
        r = MixtureDist.from_discrete(pair.minus, kern)
        coarse = delta_mixture_estimate(p, r, 0.01, tol=1e-8)
        fine = delta_mixture_estimate(p, r, 0.01, tol=5e-9)
        assert abs(coarse.value - fine.value) <= max(coarse.error, 1e-15)

    def test_mixture_normalized(self):
        q = PropertyQuery(50, 0.2)
        m = MixtureDist.from_discrete(pure_pair(q).plus, ContinuousKernel("laplace", 0.01))
        f = lambda z: m.density(z)[0]
        total = sum(sint.quad(f, a, b, limit=400)[0] for a, b in [(-1, 0), (0, 0.5), (0.5, 1), (1, 2)])
        assert total == pytest.approx(1.0, abs=1e-9)


class TestCurve:
    def test_default_grid(self):
        assert len(DEFAULT_EPS_GRID) == 201
        assert DEFAULT_EPS_GRID[0] == 0.0
        assert DEFAULT_EPS_GRID[1] == pytest.approx(1e-4)
        assert DEFAULT_EPS_GRID[-1] == pytest.approx(5.0)

    def test_mirror_pair_symmetric(self):
        p = DiscreteDist.from_masses({0: 0.2, 1: 0.5, 2: 0.3})
        q = p.reflect(2)
        for e in (0.0, 0.1, 0.5):
            assert delta(p, q, e) == pytest.approx(delta(q, p, e), abs=1e-15)

    def test_zero_grid_is_tv(self):
        p, q = bern(0.9), bern(0.2)
        c = curve(p, q, [0.0])
        assert c.deltas[0] == pytest.approx(total_variation(p, q), abs=1e-15)
        assert c.provenance == "oracle"

    def test_pure_pair_matches_closed_form(self):
        q = PropertyQuery(20, 0.5)
        pair = pure_pair(q)
        c = curve(pair.plus, pair.minus, [0.1])
        assert c.deltas[0] == pytest.approx(max(delta_pure_analytic(q, 0.1)), abs=1e-10)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            curve(bern(0.5), bern(0.4), [0.2, 0.1])
        with pytest.raises(ValueError):
            curve(bern(0.5), bern(0.4), [-0.1])

    def test_parallel_equals_serial(self):
        q = PropertyQuery(100, 0.1)
        kern = ContinuousKernel("gaussian", 0.01)
        pair = pure_pair(q)
        p, r = MixtureDist.from_discrete(pair.plus, kern), MixtureDist.from_discrete(pair.minus, kern)
        grid = [0.0, 0.01, 0.1]
        assert curve(p, r, grid, workers=3).deltas == curve(p, r, grid).deltas

    def test_interpolation(self):
        c = PrivacyCurve((0.0, 1.0), (0.5, 0.1), "analytic")
        assert c(0.5) == pytest.approx(0.3)
        with pytest.raises(ValueError):
            PrivacyCurve((0.0,), (0.5,), "guess")


class TestCoarsen:
    def test_identity(self):
        p = DiscreteDist.from_masses({0: 0.2, 1: 0.5, 2: 0.3})
        c = coarsen(p, [0, 1, 2, 3])
        assert c.locations == p.locations
        np.testing.assert_allclose(c.mass, p.mass, rtol=1e-15)

    def test_single_bucket(self):
        c = coarsen(DiscreteDist.from_masses({0: 0.2, 1: 0.5, 2: 0.3}), [0, 2])
        assert c.locations == (Fraction(0),)
        assert c.mass[0] == pytest.approx(1.0)

    def test_bernoulli_indistinguishable(self):
        a, b = coarsen(bern(0.9), [0, 1]), coarsen(bern(0.1), [0, 1])
        assert all(delta(a, b, e) == 0.0 for e in (0.0, 0.5, 2.0))

    def test_uncovered_atom(self):
        with pytest.raises(ValueError):
            coarsen(bern(0.5), [Fraction(1, 2), 1])


# property suites

simplex = st.lists(st.floats(0.01, 1.0), min_size=2, max_size=8)


def _dist(weights):
    w = np.array(weights) / sum(weights)
    return DiscreteDist.from_masses({Fraction(i, len(w)): float(x) for i, x in enumerate(w)})


pairs = st.integers(2, 8).flatmap(
    lambda k: st.tuples(st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k),
                        st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k)))


@settings(max_examples=100, deadline=None)
@given(pairs, st.floats(0, 3), st.floats(0, 3))
def test_monotone_and_bounded(wp, e1, e2):
    p, q = _dist(wp[0]), _dist(wp[1])
    lo, hi = sorted((e1, e2))
    d_lo, d_hi = delta(p, q, lo), delta(p, q, hi)
    assert 0.0 <= d_hi <= d_lo <= 1.0


@settings(max_examples=100, deadline=None)
@given(pairs)
def test_zero_eps_is_total_variation(wp):
    p, q = _dist(wp[0]), _dist(wp[1])
    assert abs(delta(p, q, 0.0) - total_variation(p, q)) <= 1e-9
    assert abs(delta(q, p, 0.0) - total_variation(p, q)) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(pairs, st.data(), st.floats(0, 2))
def test_post_processing(wp, data, eps):
    p, q = _dist(wp[0]), _dist(wp[1])
    k = len(wp[0])
    cuts = data.draw(st.sets(st.integers(1, k - 1)))
    edges = [Fraction(0)] + [Fraction(c, k) for c in sorted(cuts)] + [Fraction(k - 1, k)]
    edges = sorted(set(edges))
    if len(edges) < 2:
        edges = [Fraction(0), Fraction(1)]
    cp, cq = coarsen(p, edges), coarsen(q, edges)
    assert delta(cp, cq, eps) <= delta(p, q, eps) + 1e-14
    assert delta(cq, cp, eps) <= delta(q, p, eps) + 1e-14


@settings(max_examples=60, deadline=None)
@given(pairs, pairs, st.floats(0, 2))
def test_mixing_convexity(w1, w2, eps):
    p1, q1, p2, q2 = _dist(w1[0]), _dist(w1[1]), _dist(w2[0]), _dist(w2[1])
    bound = max(delta(p1, q1, eps), delta(p2, q2, eps))
    for lam in (0.25, 0.5, 0.75):
        assert delta(mix(lam, p1, p2), mix(lam, q1, q2), eps) <= bound + 1e-14


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 60), st.floats(0.02, 0.98), st.floats(0, 1))
def test_pure_pair_monotone_over_grid(n, pi, shift):
    pair = pure_pair(PropertyQuery(n, pi))
    c = curve(pair.plus, pair.minus, [0.0, 0.01 + shift, 0.1 + shift, 1.0 + shift])
    assert all(b <= a for a, b in zip(c.deltas, c.deltas[1:]))
    assert all(0.0 <= d <= 1.0 for d in c.deltas)

import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from funoclust.betadist import (BetaMixture, UnusableComponentError, beta_component,
                                component_params, density_d, kl_divergence,
                                mixture_from_stats)
from funoclust.mixture import ClusterStats, cluster_stats


def quad_over(mix, f=lambda d, dens: dens):
    lo, hi = mix.lower, mix.upper
    pts = sorted({c.lower for c in mix.components} | {c.upper for c in mix.components}
                 | {c.mean() for c in mix.components})
    pts = [x for x in pts if lo < x < hi]
    val, _ = integrate.quad(lambda d: f(d, float(density_d(d, mix))), lo, hi,
                            points=pts or None, limit=500, epsabs=1e-12, epsrel=1e-10)
    return val


def test_shapes():
    comp = beta_component(n_h=14, pi_hat=0.5, logdet=0.0, n_interior=8)
    assert comp.shape2 == 0.5
    assert comp.shape1 == 6.0
    assert beta_component(300, 0.5, 1.0, 8).shape1 == 6.0


def test_shift_identity_cov():
    st_ = ClusterStats(np.array([50]), np.zeros((1, 4)), np.eye(4)[None], np.array([1.0]),
                       np.array([False]))
    (comp,) = component_params(st_, 0)
    assert comp.c == pytest.approx(2 * np.log(2 * np.pi), abs=1e-14)
    assert comp.scale == pytest.approx(100 / 49 ** 2)
    assert comp.upper - comp.lower == pytest.approx(49 ** 2 / 100)


def test_too_small_cluster_is_unusable():
    with pytest.raises(UnusableComponentError):
        beta_component(13, 1.0, 0.0, 8)
    with pytest.raises(UnusableComponentError):
        beta_component(100, 1.0, -np.inf, 8)


def test_mixture_from_stats_drops_small_cluster(rng):
    X = rng.normal(size=(60, 4))
    labels = np.r_[np.zeros(55, int), np.ones(5, int)]
    with pytest.warns(RuntimeWarning):
        mix, usable = mixture_from_stats(cluster_stats(X, labels), 0)
    np.testing.assert_array_equal(usable, [True, False])
    assert len(mix.components) == 1 and mix.weights[0] == 1.0


def test_density_outside_support():
    comp = beta_component(40, 0.6, 0.3, 2)
    mix = BetaMixture((comp,), [1.0])
    assert density_d(comp.c - 1e-9, mix) == 0.0
    assert density_d(comp.c - 10, mix) == 0.0
    assert density_d(comp.upper + 1e-9, mix) == 0.0


@pytest.mark.parametrize("n_h,K", [(30, 0), (14, 8), (250, 8), (500, 4), (1000, 8)])
def test_single_component_normalization_and_mean(n_h, K):
    comp = beta_component(n_h, 0.5, 1.7, K)
    mix = BetaMixture((comp,), [1.0])
    assert quad_over(mix) == pytest.approx(1.0, abs=1e-6)
    expected_mean = comp.c + (n_h - 1) ** 2 / (2 * n_h) * comp.shape1 / (comp.shape1 + comp.shape2)
    assert quad_over(mix, lambda d, dens: d * dens) == pytest.approx(expected_mean, abs=1e-6)


def test_mixture_normalization_and_support():
    comps = (beta_component(120, 0.3, -2.0, 8), beta_component(280, 0.7, 4.0, 8))
    mix = BetaMixture(comps, [0.3, 0.7])
    assert quad_over(mix) == pytest.approx(1.0, abs=1e-6)
    grid = np.linspace(mix.lower - 5, mix.upper + 5, 2001)
    dens = density_d(grid, mix)
    assert np.all(dens >= 0)
    assert np.all(dens[grid <= mix.lower] == 0) and np.all(dens[grid >= mix.upper] == 0)


def test_matches_scipy_beta():
    comp = beta_component(77, 0.4, 2.5, 3)
    d = np.linspace(comp.lower, comp.upper, 50)[1:-1]
    ref = stats.beta(comp.shape1, comp.shape2, loc=comp.c, scale=1 / comp.scale).pdf(d)
    np.testing.assert_allclose(comp.pdf(d), ref, rtol=1e-10)


def test_large_shapes_stay_finite():
    comp = beta_component(100000, 0.5, 10.0, 8)
    vals = comp.pdf(np.linspace(comp.lower, comp.lower + 40, 100))
    assert np.all(np.isfinite(vals))


def draws(comp, n, rng):
    return comp.ppf(rng.uniform(size=n))


def test_kl_near_zero_and_shrinks_for_matching_sample(rng):
    comp = beta_component(250, 1.0, 0.0, 8)
    mix = BetaMixture((comp,), [1.0])
    kls = [np.mean([kl_divergence(draws(comp, n, rng), mix) for _ in range(20)])
           for n in (100, 1000, 20000)]
    assert kls[0] > kls[1] > kls[2]
    assert kls[2] < 1e-3


def test_kl_large_for_sample_at_upper_edge():
    comp = beta_component(250, 1.0, 0.0, 8)
    mix = BetaMixture((comp,), [1.0])
    sample = np.full(200, comp.upper - 1e-6)
    assert kl_divergence(sample, mix) > 10


def test_kl_monte_carlo_noise_floor(rng):
    comp = beta_component(60, 1.0, 0.0, 4)
    mix = BetaMixture((comp,), [1.0])
    kls = [kl_divergence(draws(comp, 1000, rng), mix) for _ in range(200)]
    assert np.mean(kls) < 0.05


def test_kl_clamps_out_of_support():
    comp = beta_component(60, 1.0, 0.0, 4)
    mix = BetaMixture((comp,), [1.0])
    inside = np.r_[np.full(10, comp.lower + 1e-9), np.full(10, comp.upper - 1e-9)]
    outside = np.r_[np.full(10, comp.lower - 50), np.full(10, comp.upper + 50)]
    assert kl_divergence(inside, mix) == pytest.approx(kl_divergence(outside, mix))


def test_kl_argument_checks():
    mix = BetaMixture((beta_component(60, 1.0, 0.0, 4),), [1.0])
    with pytest.raises(ValueError):
        kl_divergence(np.zeros(5), mix, bins=10)
    with pytest.raises(ValueError):
        kl_divergence(np.zeros(50), mix, bins=1)


@settings(max_examples=50, deadline=None)
@given(data=st.lists(st.floats(-100, 200), min_size=20, max_size=200),
       n1=st.integers(20, 400), n2=st.integers(20, 400), w=st.floats(0.05, 0.95),
       bins=st.integers(2, 20))
def test_kl_nonnegative(data, n1, n2, w, bins):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        mix = BetaMixture((beta_component(n1, w, 1.0, 4), beta_component(n2, 1 - w, -3.0, 4)),
                          [w, 1 - w])
    if len(data) >= bins:
        assert kl_divergence(np.asarray(data), mix, bins) >= 0

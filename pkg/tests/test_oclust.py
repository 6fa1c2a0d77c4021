import numpy as np
import pytest
from scipy.stats import multivariate_normal

from funoclust.basis import eval_basis, fit_coefficients, make_knots
from funoclust.evaluate import ari
from funoclust.mixture import fit_gmm
from funoclust.oclust import (OUTLIER, candidate_outlier, d_values, run_oclust,
                              subset_logliks)


def mle_loglik(X):
    mu = X.mean(axis=0)
    cov = np.cov(X.T, bias=True)
    return multivariate_normal(mu, cov).logpdf(X).sum()


def brute_force_loo(X):
    """Exact leave-one-out log-likelihoods of a single Gaussian."""
    return np.array([mle_loglik(np.delete(X, j, axis=0)) for j in range(len(X))])


def mahalanobis_sq(X):
    mu = X.mean(axis=0)
    P = np.linalg.inv(np.cov(X.T, bias=True))
    return np.einsum("ij,jk,ik->i", X - mu, P, X - mu)


def single_fit(X):
    return fit_gmm(X, 1, seed=0)


def test_candidate_outlier_argmax():
    assert candidate_outlier([-100.0, -90.0, -105.0]) == 1
    assert candidate_outlier([3.0, 3.0, 3.0]) == 0
    with pytest.raises(ValueError):
        candidate_outlier([])


def test_d_values():
    np.testing.assert_array_equal(d_values(np.full(4, -12.5), -12.5), np.zeros(4))
    v = np.array([-5.0, -2.0, -7.0])
    d = d_values(v, -10.0)
    np.testing.assert_array_equal(d, [5.0, 8.0, 3.0])
    assert np.argmax(d) == candidate_outlier(v)


@pytest.mark.parametrize("trial", range(10))
def test_subset_logliks_match_brute_force(rng, trial):
    n = int(rng.integers(8, 16))
    p = int(rng.integers(1, 4))
    X = rng.normal(size=(n, p)) @ rng.normal(size=(p, p))
    sub = subset_logliks(X, 1, single_fit(X).params)
    np.testing.assert_allclose(sub.values, brute_force_loo(X), atol=1e-6)
    assert sub.fallbacks == []


def test_gross_outlier_is_argmax(rng):
    X = rng.normal(size=(20, 2))
    X[7] = [10.0, -10.0]
    sub = subset_logliks(X, 1, single_fit(X).params)
    assert candidate_outlier(sub.values) == 7
    assert candidate_outlier(brute_force_loo(X)) == 7


def test_point_at_mean_changes_loglik_least(rng):
    X = rng.normal(size=(30, 3))
    X = np.vstack([X, X.mean(axis=0)])
    vals = subset_logliks(X, 1, single_fit(X).params).values
    assert np.argmin(vals) == 30


def test_duplicates_have_equal_subset_logliks(rng):
    X = np.vstack([rng.normal(0, 1, (25, 2)), rng.normal(8, 1, (25, 2))])
    X = np.vstack([X, X])
    fit = fit_gmm(X, 2, seed=0)
    vals = subset_logliks(X, 2, fit.params).values
    np.testing.assert_allclose(vals[:50], vals[50:], rtol=1e-9)


@pytest.mark.parametrize("trial", range(5))
def test_ranking_equals_mahalanobis_ranking(rng, trial):
    n = int(rng.integers(12, 31))
    X = rng.standard_t(4, size=(n, 3))
    vals = subset_logliks(X, 1, single_fit(X).params).values
    np.testing.assert_array_equal(np.argsort(vals), np.argsort(mahalanobis_sq(X)))
    assert candidate_outlier(vals) == np.argmax(mahalanobis_sq(X))


def test_shifted_curve_is_the_candidate(rng):
    # a vertically shifted curve has coefficients mean + c*1, the largest
    # Mahalanobis distance, and so is removed first
    grid = np.linspace(0, 1, 40)
    B = eval_basis(make_knots(0, 1, 2), grid)
    base = np.sin(2 * np.pi * grid)
    Y = base + rng.normal(0, 0.3, (60, 1)) * grid + rng.normal(0, 0.2, (60, 40))
    Y[17] += 1.5
    coefs = fit_coefficients(B, Y)
    vals = subset_logliks(coefs, 1, single_fit(coefs).params).values
    assert candidate_outlier(vals) == 17


def gaussian_cluster(rng, n, p):
    A = rng.normal(size=(p, p))
    return rng.normal(size=(n, p)) @ A


def test_run_is_deterministic_and_removes_one_per_iteration(rng):
    X = np.vstack([gaussian_cluster(rng, 80, 4), gaussian_cluster(rng, 80, 4) + 30])
    a = run_oclust(X, G=2, F=8, seed=3)
    b = run_oclust(X, G=2, F=8, seed=3)
    np.testing.assert_array_equal(a.kl_trace, b.kl_trace)
    np.testing.assert_array_equal(a.final_labels, b.final_labels)
    assert a.kl_trace.size == 9
    assert len(set(a.removal_sequence.tolist())) == 8
    assert [d.size for d in a.d_samples] == list(range(160, 151, -1))
    assert a.best_iteration == int(np.argmin(a.kl_trace))
    assert (a.final_labels == OUTLIER).sum() == a.best_iteration
    assert set(np.flatnonzero(a.final_labels == OUTLIER)) == set(a.outliers.tolist())


def test_clean_separated_clusters(rng):
    truth = np.repeat([1, 2], 150)
    X = np.vstack([gaussian_cluster(rng, 150, 4), gaussian_cluster(rng, 150, 4) + 100])
    res = run_oclust(X, G=2, F=10, seed=0)
    assert res.best_iteration <= 5
    kept = res.final_labels != OUTLIER
    assert ari(truth[kept], res.final_labels[kept]) == 1.0


def test_planted_outlier_raises_kl():
    wins = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(200, 4))
        Xo = X.copy()
        Xo[0] = 10.0 * np.ones(4) / 2
        clean = run_oclust(X, G=1, F=0, seed=seed).kl_trace[0]
        dirty = run_oclust(Xo, G=1, F=0, seed=seed).kl_trace[0]
        wins += dirty > clean
    assert wins >= 18


def test_planted_outliers_are_removed_first(rng):
    X = np.vstack([gaussian_cluster(rng, 120, 4), gaussian_cluster(rng, 120, 4) + 40])
    X[[3, 150]] += rng.choice([-1, 1], (2, 4)) * 60
    res = run_oclust(X, G=2, F=6, seed=1)
    assert set(res.removal_sequence[:2].tolist()) == {3, 150}
    assert {3, 150} <= set(res.outliers.tolist())


def test_too_many_outliers_rejected(rng):
    X = rng.normal(size=(30, 4))
    with pytest.raises(ValueError, match="too few"):
        run_oclust(X, G=2, F=18)
    with pytest.raises(ValueError):
        run_oclust(X, G=1, F=3, n_interior=2)

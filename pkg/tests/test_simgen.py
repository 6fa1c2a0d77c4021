import numpy as np
import pytest

from funoclust.simgen import SimConfig, generate

NOISELESS = dict(noise_sd=0.0, scale_sd=0.0, shift1=(0.0, 0.0), level1=(0.0, 0.0),
                 shift2=(2.0, 0.0), level2=(-1.0, 0.0))


def test_default_design_shape():
    data = generate(SimConfig(seed=1))
    assert data.curves.values.shape == (515, 100)
    np.testing.assert_allclose(data.curves.grid, np.linspace(0, 2 * np.pi, 100))
    assert np.bincount(data.labels).tolist() == [15, 250, 250]


def test_noiseless_curves_equal_class_means():
    data = generate(SimConfig(n_per_class=5, n_outliers=2, **NOISELESS))
    t = data.curves.grid
    np.testing.assert_allclose(data.curves.values[data.labels == 1], np.tile(np.sin(t), (5, 1)),
                               atol=1e-15)
    np.testing.assert_allclose(data.curves.values[data.labels == 2],
                               np.tile(np.log(t + 2) - 1, (5, 1)), atol=1e-15)


def test_outliers_within_good_range():
    data = generate(SimConfig(seed=4))
    good = data.curves.values[data.labels != 0]
    bad = data.curves.values[data.labels == 0]
    assert bad.min() >= good.min() and bad.max() <= good.max()


def test_seeded_reproducibility():
    a, b = generate(SimConfig(seed=9)), generate(SimConfig(seed=9))
    np.testing.assert_array_equal(a.curves.values, b.curves.values)
    c = generate(SimConfig(seed=10))
    assert not np.allclose(a.curves.values, c.curves.values)


def test_class_one_mean_converges_to_sine():
    n = 4000
    data = generate(SimConfig(n_per_class=n, n_outliers=0, seed=2))
    y = data.curves.values[data.labels == 1]
    se = y.std(axis=0, ddof=1) / np.sqrt(n)
    # E[a sin(t - b)] = E[a] E[cos b] sin t - ..., with E[cos b] = exp(-0.08)
    t = data.curves.grid
    expected = np.exp(-0.4 ** 2 / 2) * np.sin(t)
    assert np.all(np.abs(y.mean(axis=0) - expected) < 5 * se)


def test_per_curve_parameters_constant_in_t():
    cfg = SimConfig(n_per_class=3, n_outliers=0, noise_sd=0.0, seed=5)
    y = generate(cfg).curves.values[:3]
    t = np.linspace(0, 2 * np.pi, 100)
    for row in y:
        # a sin(t - b) + g is in the span of {sin, cos, 1}
        A = np.column_stack([np.sin(t), np.cos(t), np.ones_like(t)])
        coef, *_ = np.linalg.lstsq(A, row, rcond=None)
        np.testing.assert_allclose(A @ coef, row, atol=1e-12)


def lag1(x):
    x = x - x.mean()
    return (x[:-1] * x[1:]).sum() / (x * x).sum()


def test_outlier_rows_have_no_serial_smoothness():
    data = generate(SimConfig(n_outliers=50, seed=6))
    good = [lag1(r) for r in data.curves.values[data.labels != 0]]
    bad = [lag1(r) for r in data.curves.values[data.labels == 0]]
    assert abs(np.mean(bad)) < 0.05
    assert np.mean(good) > 0.5


def test_log_shift_resampled_positive():
    cfg = SimConfig(n_per_class=500, n_outliers=0, shift2=(0.2, 0.4), seed=0)
    assert np.all(np.isfinite(generate(cfg).curves.values))


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(n_per_class=0)
    with pytest.raises(ValueError):
        SimConfig(noise_sd=-1.0)

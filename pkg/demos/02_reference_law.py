# %% [markdown]
# # The reference law for subset log-likelihood differences
#
# For a single Gaussian cluster, refit the model once per left-out point and
# compare the differences ``d_j = loglik(without j) - loglik(all)`` with the
# shifted, scaled beta law implied by the cluster size and covariance.

# %%
import numpy as np
from scipy import stats

from funoclust import cluster_stats, component_params, d_values, fit_gmm, subset_logliks

rng = np.random.default_rng(0)
K, n = 4, 500
X = rng.normal(size=(n, K + 4)) @ rng.normal(size=(K + 4, K + 4))

fit = fit_gmm(X, 1)
d = d_values(subset_logliks(X, 1, fit.params).values, fit.loglik)
(comp,) = component_params(cluster_stats(X, fit.labels, 1), K)
print(f"support starts at c = {comp.c:.3f}; smallest d = {d.min():.3f}")
print(f"theoretical mean {comp.mean():.3f}, observed mean {d.mean():.3f}")

# %%
ks = stats.kstest(d, comp.cdf)
print(f"KS distance {ks.statistic:.4f} (p = {ks.pvalue:.2f})")

# %% [markdown]
# Adding one gross outlier pushes its difference far into the right tail,
# and it becomes the first candidate for removal.

# %%
X[0] = X[0] + 15 * X.std(axis=0)
fit = fit_gmm(X, 1)
vals = subset_logliks(X, 1, fit.params).values
print("candidate:", int(np.argmax(vals)), "with d =", round(float(vals.max() - fit.loglik), 2))

"""Simultaneous clustering and outlier trimming for functional data."""

__version__ = "0.1.0"

from .basis import (CurveSet, KnotVector, eval_basis, fit_coefficients, make_knots,
                    reconstruct)
from .betadist import (BetaComponent, BetaMixture, beta_component, component_params,
                       density_d, kl_divergence, mixture_from_stats)
from .evaluate import ari, confusion_matrix, outlier_rates, trimmed_kmeans
from .mixture import (ClusterStats, GmmParams, cluster_stats, complete_data_log_likelihood,
                      fit_gmm, log_likelihood)
from .oclust import (OUTLIER, OclustResult, candidate_outlier, d_values, run_funoclust,
                     run_oclust, subset_logliks)
from .simgen import LabeledCurveSet, SimConfig, generate

__all__ = [
    "CurveSet", "KnotVector", "eval_basis", "fit_coefficients", "make_knots", "reconstruct",
    "BetaComponent", "BetaMixture", "beta_component", "component_params", "density_d",
    "kl_divergence", "mixture_from_stats", "ari", "confusion_matrix", "outlier_rates",
    "trimmed_kmeans", "ClusterStats", "GmmParams", "cluster_stats",
    "complete_data_log_likelihood", "fit_gmm", "log_likelihood", "OUTLIER", "OclustResult",
    "candidate_outlier", "d_values", "run_funoclust", "run_oclust", "subset_logliks",
    "LabeledCurveSet", "SimConfig", "generate",
]

"""Weighted-bootstrap inference for quadratic forms of sample averages.

The library covers the statistic Q = n * ||mean(Z)||^2 and its multiplier
bootstrap with growing dimension, reference chi-square laws, numerical
diagnostics for the approximation quality, GMM/GEL specification tests with
bootstrap p-values, and a deterministic Monte Carlo harness.
"""

from .bootstrap import (
    DEFAULT_LEVELS,
    BootstrapDistribution,
    QuantileGrid,
    bootstrap_distribution,
    bootstrap_pvalue,
    bootstrap_quantile,
    coverage_discrepancy,
)
from .diagnostics import (
    AssumptionReport,
    SmoothIndicatorParams,
    anticoncentration_estimate,
    assumption_report,
    bandwidth_bound,
    lindeberg_terms,
    ramp_indicator,
    smooth_indicator,
)
from .errors import DimensionError, NotPSDError
from .gmm import (
    EstimationResult,
    GelKernel,
    GmmConfig,
    MomentModel,
    MstTestResult,
    conditional_spline_model,
    gel_estimate,
    gel_inner_solve,
    gmm_estimate,
    gmm_objective,
    kernel,
    mst_bootstrap_pvalue,
    panel_ab_model,
)
from .refdist import chisq_cdf, chisq_quantile, normalized_stat, weighted_chisq_sample
from .simulate import (
    SimConfig,
    StudyResult,
    derive_d,
    dgp_draw,
    parse_config,
    run_figure1,
    run_study,
    run_table,
)
from .stats import (
    Sample,
    Spectrum,
    load_sample_csv,
    matrix_sqrt,
    max_cov_discrepancy,
    quadratic_form_stat,
    sample_second_moment,
    sym_eigen,
    trace_power,
    weighted_quadratic_form_stat,
)
from .weights import RngState, SCHEMES, draw_weights, scheme_moments

__all__ = [
    "DEFAULT_LEVELS",
    "SCHEMES",
    "AssumptionReport",
    "BootstrapDistribution",
    "DimensionError",
    "EstimationResult",
    "GelKernel",
    "GmmConfig",
    "MomentModel",
    "MstTestResult",
    "NotPSDError",
    "QuantileGrid",
    "RngState",
    "Sample",
    "SimConfig",
    "SmoothIndicatorParams",
    "Spectrum",
    "StudyResult",
    "anticoncentration_estimate",
    "assumption_report",
    "bandwidth_bound",
    "bootstrap_distribution",
    "bootstrap_pvalue",
    "bootstrap_quantile",
    "chisq_cdf",
    "chisq_quantile",
    "conditional_spline_model",
    "coverage_discrepancy",
    "derive_d",
    "dgp_draw",
    "draw_weights",
    "gel_estimate",
    "gel_inner_solve",
    "gmm_estimate",
    "gmm_objective",
    "kernel",
    "lindeberg_terms",
    "load_sample_csv",
    "matrix_sqrt",
    "max_cov_discrepancy",
    "mst_bootstrap_pvalue",
    "normalized_stat",
    "panel_ab_model",
    "parse_config",
    "quadratic_form_stat",
    "ramp_indicator",
    "run_figure1",
    "run_study",
    "run_table",
    "sample_second_moment",
    "scheme_moments",
    "smooth_indicator",
    "sym_eigen",
    "trace_power",
    "weighted_chisq_sample",
    "weighted_quadratic_form_stat",
]

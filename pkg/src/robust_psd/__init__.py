"""Robust PSD estimation: quantile-aggregated Welch spectra with closed-form
bias correction, the matching theory (bias, variance, equivalent degrees of
freedom), and a seeded Monte Carlo harness."""

from .mc import (
    ExperimentConfig,
    ExperimentRow,
    derive_stream_seed,
    gen_white_noise,
    periodogram_distribution_check,
    run_bias_experiment,
    run_variance_experiment,
)
from .spectrum import (
    PeriodogramSet,
    PsdEstimate,
    Signal,
    estimate_psd,
    modified_periodograms,
    one_sided,
    quantiles_by_bin,
    sample_quantile,
    wosa_mean,
    wp_estimate,
)
from .taper import (
    EDOF_MODES,
    TAPER_KINDS,
    SegmentPlan,
    Taper,
    edof,
    make_taper,
    normalize_energy,
    plan_segments,
)
from .theory import (
    BIAS_METHODS,
    QuantileSpec,
    alternating_harmonic,
    bias_allen,
    bias_digamma,
    bias_factor,
    bias_harmonic,
    bias_limit,
    order_statistic_mean_numeric,
    resolve_case,
    round_half_away,
    scan_variance_optimum,
    variance_digamma,
    variance_limit,
    variance_theory,
)

__version__ = "0.1.0"

__all__ = [
    "BIAS_METHODS",
    "EDOF_MODES",
    "ExperimentConfig",
    "ExperimentRow",
    "PeriodogramSet",
    "PsdEstimate",
    "QuantileSpec",
    "SegmentPlan",
    "Signal",
    "TAPER_KINDS",
    "Taper",
    "alternating_harmonic",
    "bias_allen",
    "bias_digamma",
    "bias_factor",
    "bias_harmonic",
    "bias_limit",
    "derive_stream_seed",
    "edof",
    "estimate_psd",
    "gen_white_noise",
    "make_taper",
    "modified_periodograms",
    "normalize_energy",
    "one_sided",
    "order_statistic_mean_numeric",
    "periodogram_distribution_check",
    "plan_segments",
    "quantiles_by_bin",
    "resolve_case",
    "round_half_away",
    "run_bias_experiment",
    "run_variance_experiment",
    "sample_quantile",
    "scan_variance_optimum",
    "variance_digamma",
    "variance_limit",
    "variance_theory",
    "wosa_mean",
    "wp_estimate",
    "__version__",
]

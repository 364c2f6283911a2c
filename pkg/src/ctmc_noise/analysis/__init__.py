"""Spectral decomposition, Lorentzian sums and power-law scaling."""

from .spectral import (
    EigenStructure,
    LorentzianSpectrum,
    analytic_psd,
    autocorrelation,
    cosine_transform_psd,
    coupling_coefficients,
    degenerate_groups,
    diffusion_coefficient,
    eigendecompose,
    eigendecompose_tridiagonal,
    fundamental_matrix_composition,
    generalized_fundamental_matrix,
    generator_spectrum,
    graph_fourier_transform,
    graph_psd,
    lorentzian_spectrum,
    one_sided_psd,
    sampled_psd,
)
from .scaling import (
    InadmissibleScalingError,
    LorentzianFit,
    NoiseExponent,
    PowerLawFit,
    ScalingFit,
    SlopeEstimate,
    asymptotic_psd,
    cauchy_moment_integral,
    correction_coefficient,
    default_window,
    estimate_psd_slope,
    fit_lorentzian,
    fit_power_law,
    fit_scaling,
    is_admissible,
    locate_slope_band,
    log_binned,
    lorentzian_sum_direct,
    predict_zeta,
    synthetic_spectrum,
)

__all__ = [
    "EigenStructure",
    "LorentzianSpectrum",
    "analytic_psd",
    "autocorrelation",
    "cosine_transform_psd",
    "coupling_coefficients",
    "degenerate_groups",
    "diffusion_coefficient",
    "eigendecompose",
    "eigendecompose_tridiagonal",
    "fundamental_matrix_composition",
    "generalized_fundamental_matrix",
    "generator_spectrum",
    "graph_fourier_transform",
    "graph_psd",
    "lorentzian_spectrum",
    "one_sided_psd",
    "sampled_psd",
    "InadmissibleScalingError",
    "LorentzianFit",
    "NoiseExponent",
    "PowerLawFit",
    "ScalingFit",
    "SlopeEstimate",
    "asymptotic_psd",
    "cauchy_moment_integral",
    "correction_coefficient",
    "default_window",
    "estimate_psd_slope",
    "fit_lorentzian",
    "fit_power_law",
    "fit_scaling",
    "is_admissible",
    "locate_slope_band",
    "log_binned",
    "lorentzian_sum_direct",
    "predict_zeta",
    "synthetic_spectrum",
]

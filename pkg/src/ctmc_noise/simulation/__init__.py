"""Gillespie simulation and periodogram estimation."""

from .gillespie import (
    BirthDeathCounter,
    FiniteChain,
    SimConfig,
    Trajectory,
    gillespie_path,
    occupation_fractions,
    realization_rng,
    resample_uniform,
    resolve_grid,
    sample_path_on_grid,
    time_average,
)
from .periodogram import WINDOWS, Periodogram, averaged_periodogram, periodogram
from .compare import ComparisonReport, compare_analytic_empirical, compare_with_periodogram, default_band

__all__ = [
    "BirthDeathCounter",
    "FiniteChain",
    "SimConfig",
    "Trajectory",
    "gillespie_path",
    "occupation_fractions",
    "realization_rng",
    "resample_uniform",
    "resolve_grid",
    "sample_path_on_grid",
    "time_average",
    "WINDOWS",
    "Periodogram",
    "averaged_periodogram",
    "periodogram",
    "ComparisonReport",
    "compare_analytic_empirical",
    "compare_with_periodogram",
    "default_band",
]

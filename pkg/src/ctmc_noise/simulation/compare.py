"""Averaged periodograms against the sum-of-Lorentzians prediction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..analysis.scaling import log_binned
from ..analysis.spectral import LorentzianSpectrum, sampled_psd
from ..core import logger
from .gillespie import JumpModel, SimConfig
from .periodogram import Periodogram, averaged_periodogram

# the analytic curve is smooth on a log bin, so a strided subset gives its bin mean
ANALYTIC_POINTS_PER_BIN = 256


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    freqs: np.ndarray
    empirical: np.ndarray
    analytic: np.ndarray
    band: tuple[float, float]
    periodogram: Periodogram

    @property
    def log10_ratio(self) -> np.ndarray:
        return np.log10(self.empirical / self.analytic)

    @property
    def max_abs_log10_ratio(self) -> float:
        return float(np.max(np.abs(self.log10_ratio)))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "freq": self.freqs,
                "empirical": self.empirical,
                "analytic": self.analytic,
                "log10_ratio": self.log10_ratio,
            }
        )

    def summary(self) -> dict[str, object]:
        return {
            "band": list(self.band),
            "n_bins": int(self.freqs.size),
            "n_realizations": self.periodogram.n_realizations,
            "sample_dt": self.periodogram.sample_dt,
            "max_abs_log10_ratio": self.max_abs_log10_ratio,
        }


def default_band(spec: LorentzianSpectrum, pg: Periodogram) -> tuple[float, float]:
    """Half the slowest mode's frequency up to a quarter of Nyquist."""
    slowest = 0.5 * float(spec.omegas[0]) / (2.0 * np.pi)
    return max(slowest, 2.0 * pg.df), 0.25 * pg.nyquist


def bin_subsample(
    freqs: np.ndarray, band: tuple[float, float], bins_per_decade: int, cap: int = ANALYTIC_POINTS_PER_BIN
) -> np.ndarray:
    """Indices of an evenly strided subset of each log bin, at most ``cap`` per bin.

    ``freqs`` must be ascending. Bin edges are the ones ``log_binned`` uses.
    """
    f_lo, f_hi = band
    n_bins = max(1, int(round(bins_per_decade * np.log10(f_hi / f_lo))))
    bounds = np.searchsorted(freqs, np.logspace(np.log10(f_lo), np.log10(f_hi), n_bins + 1))
    bounds[-1] = np.searchsorted(freqs, f_hi, side="right")
    picks = [np.arange(lo, hi, max(1, -(-(hi - lo) // cap))) for lo, hi in zip(bounds[:-1], bounds[1:])]
    return np.concatenate(picks).astype(np.int64)


def compare_with_periodogram(
    pg: Periodogram,
    spec: LorentzianSpectrum,
    *,
    band: tuple[float, float] | None = None,
    bins_per_decade: int = 10,
) -> ComparisonReport:
    """Log-bin both the periodogram and its expected value on the same grid."""
    band = default_band(spec, pg) if band is None else (float(band[0]), float(band[1]))
    if not 0.0 < band[0] < band[1]:
        raise ValueError(f"invalid comparison band {band}")
    centres, empirical = log_binned(pg.freqs, pg.power, band, bins_per_decade)
    freqs = pg.freqs[bin_subsample(pg.freqs, band, bins_per_decade)]
    _, analytic = log_binned(freqs, sampled_psd(spec.as_mode("raw"), freqs, pg.sample_dt), band, bins_per_decade)
    if centres.size == 0:
        raise ValueError(f"no periodogram bins in band [{band[0]:g}, {band[1]:g}]")
    report = ComparisonReport(centres, empirical, analytic, band, pg)
    logger.info(
        "Compared %d bins over [%.3g, %.3g]: max |log10 ratio| = %.3f",
        centres.size,
        band[0],
        band[1],
        report.max_abs_log10_ratio,
    )
    return report


def compare_analytic_empirical(
    model: JumpModel,
    cfg: SimConfig,
    spec: LorentzianSpectrum,
    *,
    band: tuple[float, float] | None = None,
    bins_per_decade: int = 10,
    progress: bool = True,
) -> ComparisonReport:
    pg = averaged_periodogram(model, cfg, progress=progress)
    return compare_with_periodogram(pg, spec, band=band, bins_per_decade=bins_per_decade)

"""Power-law scaling of eigenstructures and the resulting PSD exponent."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.optimize
import scipy.stats
from numpy.typing import ArrayLike

from ..core import logger
from .spectral import LorentzianSpectrum

# B_2 .. B_10
BERNOULLI = {2: 1.0 / 6.0, 4: -1.0 / 30.0, 6: 1.0 / 42.0, 8: -1.0 / 30.0, 10: 5.0 / 66.0}
MIN_FIT_POINTS = 5
MIN_SLOPE_POINTS = 20
_MAX_TERMS = 2**26


class InadmissibleScalingError(ValueError):
    """Exponents violate ``α > |2β + 1|``."""


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    residual: float
    k_range: tuple[int, int]


@dataclass(frozen=True)
class ScalingFit:
    alpha: float
    beta: float
    omega0: float
    gamma0: float
    k_range: tuple[int, int]
    residual: float


@dataclass(frozen=True)
class NoiseExponent:
    alpha: float
    beta: float
    zeta: float
    admissible: bool
    K: float


@dataclass(frozen=True)
class SlopeEstimate:
    slope: float
    stderr: float
    n_bins: int
    band: tuple[float, float]


@dataclass(frozen=True)
class LorentzianFit:
    amplitude: float
    knee: float
    residual: float


def fit_power_law(values: ArrayLike, k_range: tuple[int, int] | None = None) -> PowerLawFit:
    """Least squares ``log v_k = log c + e log k`` over k in ``k_range`` (1-based, inclusive)."""
    values = np.asarray(values, dtype=float)
    k_min, k_max = (1, values.size) if k_range is None else (int(k_range[0]), int(k_range[1]))
    if k_min < 1 or k_max > values.size:
        raise ValueError(f"window [{k_min}, {k_max}] outside [1, {values.size}]")
    if k_max - k_min + 1 < MIN_FIT_POINTS:
        raise ValueError(f"window [{k_min}, {k_max}] has fewer than {MIN_FIT_POINTS} points")
    window = values[k_min - 1 : k_max]
    if np.any(window <= 0.0):
        raise ValueError("power-law fit needs positive values")
    k = np.arange(k_min, k_max + 1, dtype=float)
    fit = scipy.stats.linregress(np.log(k), np.log(window))
    predicted = fit.intercept + fit.slope * np.log(k)
    residual = float(np.max(np.abs(np.expm1(np.log(window) - predicted))))
    return PowerLawFit(float(fit.slope), float(np.exp(fit.intercept)), residual, (k_min, k_max))


def default_window(n_modes: int) -> tuple[int, int]:
    return 5, max(5 + MIN_FIT_POINTS - 1, n_modes // 10)


def fit_scaling(spec: LorentzianSpectrum, k_range: tuple[int, int] | None = None) -> ScalingFit:
    """Fit ``ω_k ∼ ω_0 k^α`` and ``γ_k ∼ γ_0 k^β`` over the distinct modes of a spectrum."""
    k_range = default_window(len(spec)) if k_range is None else k_range
    omega_fit = fit_power_law(spec.omegas, k_range)
    gamma_fit = fit_power_law(np.sqrt(spec.gammas_sq), k_range)
    return ScalingFit(
        alpha=omega_fit.exponent,
        beta=gamma_fit.exponent,
        omega0=omega_fit.prefactor,
        gamma0=gamma_fit.prefactor,
        k_range=omega_fit.k_range,
        residual=max(omega_fit.residual, gamma_fit.residual),
    )


def is_admissible(alpha: float, beta: float) -> bool:
    return bool(alpha > abs(2.0 * beta + 1.0))


def correction_coefficient(alpha: float, beta: float, tol: float = 1e-12) -> float:
    """K of the ``-K ω̄^{-2}`` correction: 1/2 at ``2β + α = 0``, ``B_2p / 2p`` at ``2β + α + 1 = 2p``."""
    s = 2.0 * beta + alpha
    if abs(s) < tol:
        return 0.5
    p = (s + 1.0) / 2.0
    if p > 0.5 and abs(p - round(p)) < tol:
        order = 2 * round(p)
        if order not in BERNOULLI:
            raise ValueError(f"Bernoulli numbers are tabulated up to B_10 (needed B_{order})")
        return BERNOULLI[order] / order
    return 0.0


def predict_zeta(alpha: float, beta: float) -> NoiseExponent:
    if not (math.isfinite(alpha) and math.isfinite(beta)):
        raise ValueError(f"exponents must be finite (got alpha={alpha}, beta={beta})")
    admissible = is_admissible(alpha, beta)
    if not admissible:
        logger.debug("Exponents (alpha=%g, beta=%g) are not admissible", alpha, beta)
        return NoiseExponent(alpha, beta, zeta=math.nan, admissible=False, K=math.nan)
    # alpha > |2 beta + 1| keeps zeta inside (-2, 0)
    zeta = (2.0 * beta - alpha + 1.0) / alpha
    return NoiseExponent(alpha, beta, zeta=zeta, admissible=True, K=correction_coefficient(alpha, beta))


def _require_admissible(alpha: float, beta: float) -> None:
    if not is_admissible(alpha, beta):
        raise InadmissibleScalingError(f"alpha={alpha:g} must exceed |2 beta + 1| = {abs(2 * beta + 1):g}")


def cauchy_moment_integral(alpha: float, beta: float, omega_bar: ArrayLike) -> np.ndarray | float:
    """``∫_0^∞ x^{2β+α} / (x^{2α} + ω̄²) dx`` in closed form."""
    _require_admissible(alpha, beta)
    omega_bar = np.asarray(omega_bar, dtype=float)
    prefactor = np.pi / (2.0 * alpha) / np.cos(np.pi * (1.0 + 2.0 * beta) / (2.0 * alpha))
    out = prefactor * omega_bar ** ((2.0 * beta - alpha + 1.0) / alpha)
    return float(out) if out.ndim == 0 else out


def asymptotic_psd(alpha: float, beta: float, omega_bar: ArrayLike) -> np.ndarray | float:
    """Large-ω̄ form of ``Σ_k f(k)``: the moment integral minus ``K ω̄^{-2}``.

    With ``ω_k = ω_0 k^α`` and ``γ_k = γ_0 k^β`` the unscaled PSD is
    ``(γ_0² / ω_0) · asymptotic_psd(α, β, ω / ω_0)``.
    """
    omega_bar = np.asarray(omega_bar, dtype=float)
    if np.any(omega_bar <= 0.0):
        raise ValueError("omega_bar must be positive")
    out = cauchy_moment_integral(alpha, beta, omega_bar) - correction_coefficient(alpha, beta) * omega_bar**-2.0
    return float(out) if np.ndim(out) == 0 else out


def _summand(alpha: float, beta: float, omega_bar: float):
    def f(x):
        return np.power(x, 2.0 * beta + alpha) / (np.power(x, 2.0 * alpha) + omega_bar**2)

    return f


def lorentzian_sum_direct(
    alpha: float,
    beta: float,
    omega_bar: float,
    terms: int | None = None,
    *,
    rtol: float = 1e-8,
) -> float:
    """``Σ_{k≥1} k^{2β+α} / (k^{2α} + ω̄²)`` as a partial sum plus a bracketed tail.

    The tail over k >= N lies between the integrals from N and from N - 1
    once the summand decreases; the midpoint is returned. When ``terms`` is
    None, N doubles until the bracket half-width is below ``rtol``.
    """
    _require_admissible(alpha, beta)
    if omega_bar < 0.0:
        raise ValueError(f"omega_bar must be non-negative (got {omega_bar})")
    f = _summand(alpha, beta, omega_bar)
    s = 2.0 * beta + alpha
    # the summand decreases beyond its peak; alpha - 2 beta > 0 when admissible
    peak = (s * omega_bar**2 / (alpha - 2.0 * beta)) ** (0.5 / alpha) if s > 0.0 else 0.0
    n_terms = int(terms) if terms is not None else max(1024, int(10 * peak) + 2)

    while True:
        if n_terms <= peak + 1:
            raise ValueError(f"{n_terms} terms do not reach the decreasing part of the summand (peak near {peak:.3g})")
        partial = math.fsum(f(np.arange(1, n_terms, dtype=float)))
        lower, _ = scipy.integrate.quad(f, n_terms, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
        last, _ = scipy.integrate.quad(f, n_terms - 1, n_terms, epsabs=0.0, epsrel=1e-12)
        half_width = 0.5 * last
        total = partial + lower + half_width
        if half_width <= rtol * total:
            return float(total)
        if terms is not None:
            raise ValueError(f"tail bracket {half_width / total:.2e} exceeds rtol={rtol:g} with {terms} terms")
        n_terms *= 2
        if n_terms > _MAX_TERMS:
            raise ValueError(f"tail bracket did not reach rtol={rtol:g} within {_MAX_TERMS} terms")


def synthetic_spectrum(alpha: float, beta: float, n: int, omega0: float = 1.0, gamma0: float = 1.0) -> LorentzianSpectrum:
    """Exact power-law eigenstructure ``ω_k = ω_0 k^α``, ``γ_k = γ_0 k^β`` for k = 1..n."""
    k = np.arange(1, n + 1, dtype=float)
    return LorentzianSpectrum(omega0 * k**alpha, (gamma0 * k**beta) ** 2)


def log_binned(freqs: ArrayLike, power: ArrayLike, band: tuple[float, float], bins_per_decade: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Average power in log-spaced bins over ``band``; empty bins are dropped."""
    freqs = np.asarray(freqs, dtype=float)
    power = np.asarray(power, dtype=float)
    f_lo, f_hi = band
    n_bins = max(1, int(round(bins_per_decade * np.log10(f_hi / f_lo))))
    edges = np.logspace(np.log10(f_lo), np.log10(f_hi), n_bins + 1)
    mask = (freqs >= f_lo) & (freqs <= f_hi)
    index = np.clip(np.searchsorted(edges, freqs[mask], side="right") - 1, 0, n_bins - 1)
    counts = np.bincount(index, minlength=n_bins)
    filled = counts > 0
    centres = np.bincount(index, weights=np.log10(freqs[mask]), minlength=n_bins)[filled] / counts[filled]
    means = np.bincount(index, weights=power[mask], minlength=n_bins)[filled] / counts[filled]
    return 10.0**centres, means


def estimate_psd_slope(
    freqs: ArrayLike,
    power: ArrayLike,
    band: tuple[float, float],
    *,
    bins_per_decade: int = 10,
) -> SlopeEstimate:
    """Log-log slope of a sampled spectrum over ``band`` after log binning."""
    freqs = np.asarray(freqs, dtype=float)
    power = np.asarray(power, dtype=float)
    f_lo, f_hi = float(band[0]), float(band[1])
    if not 0.0 < f_lo < f_hi:
        raise ValueError(f"invalid band {band}")
    if f_hi < 10.0 * f_lo * (1.0 - 1e-12):
        raise ValueError(f"band [{f_lo:g}, {f_hi:g}] spans less than a decade")
    in_band = (freqs >= f_lo) & (freqs <= f_hi)
    if not np.any(in_band):
        raise ValueError(f"no samples in band [{f_lo:g}, {f_hi:g}]")
    if int(in_band.sum()) < MIN_SLOPE_POINTS:
        raise ValueError(f"only {int(in_band.sum())} samples in band; need {MIN_SLOPE_POINTS}")
    centres, means = log_binned(freqs, power, (f_lo, f_hi), bins_per_decade)
    positive = means > 0.0
    if positive.sum() < 2:
        raise ValueError("not enough positive bins for a slope")
    fit = scipy.stats.linregress(np.log10(centres[positive]), np.log10(means[positive]))
    return SlopeEstimate(float(fit.slope), float(fit.stderr), int(positive.sum()), (f_lo, f_hi))


def locate_slope_band(
    freqs: ArrayLike,
    power: ArrayLike,
    target: float,
    *,
    decades: float = 1.0,
    step: float = 0.05,
) -> SlopeEstimate:
    """Window of ``decades`` width whose fitted slope lies closest to ``target``.

    Windows slide over the sampled range in steps of ``step`` decades; windows
    too sparse for ``estimate_psd_slope`` are skipped.
    """
    freqs = np.asarray(freqs, dtype=float)
    power = np.asarray(power, dtype=float)
    if decades < 1.0 or step <= 0.0:
        raise ValueError(f"need decades >= 1 and step > 0 (got {decades}, {step})")
    positive = freqs > 0.0
    if not np.any(positive):
        raise ValueError("no positive frequencies")
    lo, hi = np.log10(freqs[positive].min()), np.log10(freqs[positive].max())
    if hi - lo < decades:
        raise ValueError(f"sampled range spans {hi - lo:.3g} decades; need {decades:g}")
    best: SlopeEstimate | None = None
    for start in np.arange(lo, hi - decades + 1e-9, step):
        try:
            est = estimate_psd_slope(freqs, power, (10.0**start, 10.0 ** (start + decades)))
        except ValueError:
            continue
        if best is None or abs(est.slope - target) < abs(best.slope - target):
            best = est
    if best is None:
        raise ValueError("no window holds enough samples for a slope")
    return best


def fit_lorentzian(freqs: ArrayLike, power: ArrayLike, p0: tuple[float, float] | None = None) -> LorentzianFit:
    """Fit ``A / (1 + (2πf / ω_c)²)`` in log space; ``knee`` is ω_c (angular)."""
    freqs = np.asarray(freqs, dtype=float)
    power = np.asarray(power, dtype=float)
    keep = (freqs > 0.0) & (power > 0.0)
    freqs, power = freqs[keep], power[keep]
    if freqs.size < 3:
        raise ValueError("Lorentzian fit needs at least 3 positive samples")

    def model(f, log_amp, log_knee):
        return log_amp - np.log1p((2.0 * np.pi * f / np.exp(log_knee)) ** 2)

    if p0 is None:
        p0 = (float(np.max(power)), float(2.0 * np.pi * np.median(freqs)))
    params, _ = scipy.optimize.curve_fit(model, freqs, np.log(power), p0=(np.log(p0[0]), np.log(p0[1])))
    residual = float(np.max(np.abs(model(freqs, *params) - np.log(power))))
    return LorentzianFit(amplitude=float(np.exp(params[0])), knee=float(np.exp(params[1])), residual=residual)

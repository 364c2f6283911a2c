"""High-level orchestration of the spectrum, simulate and fit commands."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np

from .analysis import (
    EigenStructure,
    LorentzianSpectrum,
    analytic_psd,
    coupling_coefficients,
    default_window,
    eigendecompose,
    eigendecompose_tridiagonal,
    estimate_psd_slope,
    fit_scaling,
    lorentzian_spectrum,
    predict_zeta,
)
from .chain import DENSE_LIMIT, QUEUE_KINDS, ModelSpec, mm1_moments, stationary_distribution
from .core import (
    ensure_run_dir,
    logger,
    read_csv_columns,
    write_config_snapshot,
    write_csv,
    write_json,
)
from .simulation import (
    BirthDeathCounter,
    FiniteChain,
    Periodogram,
    SimConfig,
    averaged_periodogram,
    compare_with_periodogram,
    gillespie_path,
)

DEFAULT_OUT_DIR = "runs/latest"
DEFAULT_OMEGA_POINTS = 200
DEFAULT_TRAJECTORY_T_END = 1000.0
# default horizon, in units of the slowest relaxation time 1 / ω_min
HORIZON_RELAXATIONS = 100.0
EIGENSTRUCTURE_COLUMNS = {"k", "omega", "gamma_sq"}


def _pair(value: Any, name: str) -> tuple[float, float] | None:
    if value is None:
        return None
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    items = [float(v) for v in value]
    if len(items) != 2:
        raise ValueError(f"{name} needs two values (got {value!r})")
    return items[0], items[1]


@dataclass(frozen=True)
class RunConfig:
    """Everything one command needs: model, simulation and analysis settings."""

    model: ModelSpec
    sim: SimConfig
    out_dir: Path = Path(DEFAULT_OUT_DIR)
    omega_points: int = DEFAULT_OMEGA_POINTS
    k_range: tuple[int, int] | None = None
    band: tuple[float, float] | None = None
    eigenstructure: Path | None = None
    trajectory_t_end: float = DEFAULT_TRAJECTORY_T_END
    progress: bool = True
    # no t_end was given; cmd_simulate derives it from the analytic model
    auto_t_end: bool = False

    @classmethod
    def from_mapping(cls, config: Mapping[str, Any]) -> RunConfig:
        k_range = _pair(config.get("k_range"), "k_range")
        omega_points = int(config.get("omega_points", DEFAULT_OMEGA_POINTS))
        if omega_points < 2:
            raise ValueError(f"omega_points must be >= 2 (got {omega_points})")
        return cls(
            model=ModelSpec.from_config(config),
            sim=SimConfig.from_config(config),
            out_dir=Path(config.get("out_dir") or DEFAULT_OUT_DIR),
            omega_points=omega_points,
            k_range=None if k_range is None else (int(k_range[0]), int(k_range[1])),
            band=_pair(config.get("band"), "band"),
            eigenstructure=None if config.get("eigenstructure") is None else Path(config["eigenstructure"]),
            trajectory_t_end=float(config.get("trajectory_t_end", DEFAULT_TRAJECTORY_T_END)),
            progress=bool(config.get("progress", True)),
            auto_t_end=config.get("t_end") is None,
        )

    def to_config(self) -> dict[str, Any]:
        """Flat mapping that ``from_mapping`` turns back into this configuration."""
        flat = {**self.model.to_config(), **self.sim.to_config()}
        flat.update(
            out_dir=str(self.out_dir),
            omega_points=self.omega_points,
            k_range=list(self.k_range) if self.k_range is not None else None,
            band=list(self.band) if self.band is not None else None,
            eigenstructure=str(self.eigenstructure) if self.eigenstructure is not None else None,
            trajectory_t_end=self.trajectory_t_end,
        )
        if self.auto_t_end:
            del flat["t_end"]
        return flat


def model_eigenstructure(spec: ModelSpec) -> EigenStructure:
    """Per-mode (ω_k, γ_k²) of the model's observable."""
    if spec.is_closed_form:
        closed = spec.closed_form_spectrum()
        return EigenStructure(closed.omegas, closed.gammas_sq)
    if spec.kind in ("mm1", "birth-death") and spec.n_states > DENSE_LIMIT:
        rates = spec.birth_death_rates()
        return eigendecompose_tridiagonal(rates, spec.observable_values(rates.stationary().pi))
    g = spec.generator()
    pi = stationary_distribution(g)
    es = eigendecompose(g, pi)
    return es.with_couplings(coupling_coefficients(es, spec.observable_values(pi.pi), pi))


def analytic_eigenstructure(spec: ModelSpec) -> EigenStructure | None:
    """``model_eigenstructure`` when a solver covers the model's size, else None."""
    if spec.is_closed_form or spec.kind in ("mm1", "birth-death") or spec.n_states <= DENSE_LIMIT:
        return model_eigenstructure(spec)
    return None


def default_horizon(cfg: RunConfig, es: EigenStructure | None) -> RunConfig:
    """Fill an unset t_end with ``100 / ω_min``, never below the SimConfig default."""
    if not cfg.auto_t_end:
        return cfg
    t_end = cfg.sim.t_end
    if es is None:
        logger.info("No analytic spectrum for %s; keeping t_end = %.6g", cfg.model.kind, t_end)
    else:
        omega_min = float(np.min(es.omegas))
        t_end = max(t_end, HORIZON_RELAXATIONS / omega_min)
        logger.info("t_end = %.6g from the slowest mode omega_min = %.6g", t_end, omega_min)
    return replace(cfg, sim=replace(cfg.sim, t_end=t_end), auto_t_end=False)


def simulation_model(spec: ModelSpec) -> FiniteChain | BirthDeathCounter:
    """Queues simulate as an unbounded counter; every other kind as a finite chain."""
    if spec.kind in QUEUE_KINDS:
        lam, mu = spec.rates
        return BirthDeathCounter(lam, mu)
    g = spec.generator()
    pi = stationary_distribution(g)
    return FiniteChain.from_generator(g, pi, spec.observable_values(pi.pi))


def omega_grid(spec: LorentzianSpectrum, points: int) -> np.ndarray:
    """Log grid from a decade below the slowest mode to a decade above the fastest."""
    return np.logspace(np.log10(spec.omegas[0]) - 1.0, np.log10(spec.omegas[-1]) + 1.0, points)


def _eigenstructure_columns(es: EigenStructure) -> dict[str, np.ndarray]:
    return {"k": np.arange(1, es.omegas.size + 1), "omega": es.omegas, "gamma_sq": es._require_couplings()}


def load_eigenstructure(path: str | Path) -> EigenStructure:
    frame = read_csv_columns(path, EIGENSTRUCTURE_COLUMNS).sort_values("k")
    return EigenStructure(frame["omega"].to_numpy(dtype=float), frame["gamma_sq"].to_numpy(dtype=float))


def cmd_spectrum(cfg: RunConfig) -> dict[str, Any]:
    out_dir = ensure_run_dir(cfg.out_dir)
    write_config_snapshot(out_dir / "config.toml", cfg.to_config())
    es = model_eigenstructure(cfg.model)
    spectrum = lorentzian_spectrum(es)
    omega = omega_grid(spectrum, cfg.omega_points)

    write_csv(out_dir / "eigenstructure.csv", _eigenstructure_columns(es))
    write_csv(out_dir / "psd.csv", {"omega": omega, "psd": analytic_psd(spectrum, omega)})
    summary = {
        "model": cfg.model.to_config(),
        "n_modes": int(es.omegas.size),
        "n_distinct": len(spectrum),
        "variance": spectrum.variance,
        "diffusion": float(analytic_psd(spectrum, 0.0)),
        "omega_min": float(spectrum.omegas[0]),
        "omega_max": float(spectrum.omegas[-1]),
    }
    write_json(out_dir / "summary.json", summary)
    logger.info(
        "%s: %d modes (%d distinct), sum gamma^2 = %.6g, D_X = S(0) = %.6g",
        cfg.model.kind,
        summary["n_modes"],
        summary["n_distinct"],
        summary["variance"],
        summary["diffusion"],
    )
    return summary


def default_slope_bands(pg: Periodogram) -> dict[str, tuple[float, float]]:
    """A mid-range decade and the top decade below a quarter of Nyquist."""
    lo, hi = 10.0 * pg.df, 0.25 * pg.nyquist
    if hi < 10.0 * lo:
        return {}
    centre = np.sqrt(lo * hi)
    return {"mid": (centre / np.sqrt(10.0), centre * np.sqrt(10.0)), "high": (hi / 10.0, hi)}


def _slope_fits(pg: Periodogram, bands: Mapping[str, tuple[float, float]]) -> dict[str, Any]:
    fits: dict[str, Any] = {}
    for name, band in bands.items():
        try:
            est = estimate_psd_slope(pg.freqs, pg.power, band)
        except ValueError as exc:
            logger.warning("Slope over %s band [%.3g, %.3g] skipped: %s", name, band[0], band[1], exc)
            continue
        fits[name] = {"slope": est.slope, "stderr": est.stderr, "band": list(est.band), "n_bins": est.n_bins}
    return fits


def cmd_simulate(cfg: RunConfig) -> dict[str, Any]:
    model = simulation_model(cfg.model)
    compare = isinstance(model, FiniteChain) and model.n <= DENSE_LIMIT
    es = analytic_eigenstructure(cfg.model) if cfg.auto_t_end or compare else None
    cfg = default_horizon(cfg, es)
    out_dir = ensure_run_dir(cfg.out_dir)
    write_config_snapshot(out_dir / "config.toml", cfg.to_config())
    pg = averaged_periodogram(model, cfg.sim, progress=cfg.progress)
    write_csv(out_dir / "periodogram.csv", pg.to_frame())

    sample = gillespie_path(model, replace(cfg.sim, t_end=min(cfg.trajectory_t_end, cfg.sim.t_end)))
    write_csv(out_dir / "trajectory.csv", sample.to_columns())

    bands = {"band": cfg.band} if cfg.band is not None else default_slope_bands(pg)
    summary: dict[str, Any] = {
        "model": cfg.model.to_config(),
        "sim": cfg.sim.to_config(),
        "sample_dt": pg.sample_dt,
        "n_samples": 2 * pg.freqs.size,
        "n_realizations": pg.n_realizations,
        "time_average": pg.mean,
        "variance": pg.total_power(),
        "slopes": _slope_fits(pg, bands),
    }
    if isinstance(model, BirthDeathCounter) and model.rho < 1.0:
        summary["expected_mean"] = mm1_moments(model.lam, model.mu).mean
    elif compare and es is not None:
        report = compare_with_periodogram(pg, lorentzian_spectrum(es))
        write_csv(out_dir / "comparison.csv", report.to_frame())
        summary["comparison"] = report.summary()
    write_json(out_dir / "summary.json", summary)
    logger.info("Simulated %d realizations; time average %.6g", pg.n_realizations, pg.mean)
    return summary


def measured_band(spec: LorentzianSpectrum, k_range: tuple[int, int]) -> tuple[float, float]:
    """Angular band from ``ω_{2 k_min}`` spanning at least a decade."""
    lo = float(spec.omegas[min(2 * k_range[0], len(spec)) - 1])
    hi = max(float(spec.omegas[k_range[1] - 1]), 10.0 * lo)
    return lo, hi


def cmd_fit(cfg: RunConfig) -> dict[str, Any]:
    out_dir = ensure_run_dir(cfg.out_dir)
    write_config_snapshot(out_dir / "config.toml", cfg.to_config())
    es = load_eigenstructure(cfg.eigenstructure) if cfg.eigenstructure is not None else model_eigenstructure(cfg.model)
    spectrum = lorentzian_spectrum(es)
    k_range = default_window(len(spectrum)) if cfg.k_range is None else cfg.k_range
    fit = fit_scaling(spectrum, k_range)
    exponent = predict_zeta(fit.alpha, fit.beta)

    band = cfg.band if cfg.band is not None else measured_band(spectrum, fit.k_range)
    omega = np.logspace(np.log10(band[0]), np.log10(band[1]), 400)
    slope = estimate_psd_slope(omega, analytic_psd(spectrum, omega), band)
    report = {
        "source": str(cfg.eigenstructure) if cfg.eigenstructure is not None else cfg.model.to_config(),
        "alpha": fit.alpha,
        "beta": fit.beta,
        "omega0": fit.omega0,
        "gamma0": fit.gamma0,
        "k_range": list(fit.k_range),
        "fit_residual": fit.residual,
        "admissible": exponent.admissible,
        "zeta_predicted": exponent.zeta,
        "K": exponent.K,
        "zeta_measured": slope.slope,
        "zeta_stderr": slope.stderr,
        "band": list(slope.band),
        "difference": slope.slope - exponent.zeta,
    }
    if not exponent.admissible:
        logger.warning("Exponents alpha=%.3f, beta=%.3f fall outside alpha > |2 beta + 1|", fit.alpha, fit.beta)
    write_json(out_dir / "fit.json", report)
    logger.info(
        "alpha=%.4f beta=%.4f zeta predicted %.4f, measured %.4f",
        fit.alpha,
        fit.beta,
        exponent.zeta,
        slope.slope,
    )
    return report

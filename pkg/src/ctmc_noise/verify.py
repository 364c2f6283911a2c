"""End-to-end acceptance checks behind the ``verify`` command."""

from __future__ import annotations

import time
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import scipy.linalg
import scipy.special

from .analysis import (
    LorentzianSpectrum,
    SlopeEstimate,
    analytic_psd,
    asymptotic_psd,
    cosine_transform_psd,
    coupling_coefficients,
    degenerate_groups,
    diffusion_coefficient,
    eigendecompose,
    eigendecompose_tridiagonal,
    estimate_psd_slope,
    fit_lorentzian,
    fit_scaling,
    generalized_fundamental_matrix,
    locate_slope_band,
    log_binned,
    lorentzian_spectrum,
    lorentzian_sum_direct,
    one_sided_psd,
    predict_zeta,
)
from .chain import (
    BirthDeathRates,
    HeavyTrafficConfig,
    ModelSpec,
    ToeplitzParams,
    birth_death_eigvec_coeffs,
    char_poly_roots,
    mm1_gamma_scaling,
    mm1_moments,
    open_mm1_spectrum,
    pi_inner_product,
    resolvent_psd,
    ring_eigenvalues,
    ring_gamma_closed_form,
    star_generator,
    stationary_distribution,
    toeplitz_eigenvalues,
)
from .core import ProgressReporter, ensure_run_dir, logger, write_json
from .simulation import BirthDeathCounter, FiniteChain, SimConfig, averaged_periodogram, periodogram


@dataclass(frozen=True)
class VerifyContext:
    seed: int = 0
    quick: bool = False
    tolerance_scale: float = 1.0
    progress: bool = True

    def tol(self, value: float) -> float:
        return value * self.tolerance_scale

    def rng(self, offset: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, offset])


@dataclass
class CheckResult:
    name: str
    passed: bool
    seconds: float
    skipped: bool = False
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "skipped": self.skipped,
            "seconds": self.seconds,
            "details": self.details,
        }


def random_birth_death(rng: np.random.Generator, n: int) -> BirthDeathRates:
    return BirthDeathRates(rng.uniform(0.2, 2.0, n - 1), rng.uniform(0.2, 2.0, n - 1))


def _relative(a: Any, b: Any) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), np.finfo(float).tiny)))


def check_lorentzian_oracle(ctx: VerifyContext) -> tuple[bool, dict[str, Any]]:
    rng = ctx.rng(1)
    worst = 0.0
    chains = 10 if ctx.quick else 50
    for _ in range(chains):
        rates = random_birth_death(rng, int(rng.integers(2, 11)))
        g = rates.generator()
        pi = rates.stationary()
        x = rng.normal(size=rates.n)
        spec = lorentzian_spectrum(eigendecompose(g, pi), x, pi)
        for omega in np.array([0.1, 0.5, 1.0, 2.0]) * float(np.mean(spec.omegas)):
            worst = max(worst, _relative(analytic_psd(spec, omega), cosine_transform_psd(g, pi, x, omega)))
    return worst < ctx.tol(1e-6), {"chains": chains, "max_relative_error": worst}


def check_closed_forms(ctx: VerifyContext) -> tuple[bool, dict[str, Any]]:
    toeplitz_err = 0.0
    for n in (3, 10, 100):
        p = ToeplitzParams(-1.0, 2.0, -1.0, n)
        toeplitz_err = max(toeplitz_err, _relative(np.sort(toeplitz_eigenvalues(p)), scipy.linalg.eigvalsh(p.matrix())))
    ring_err = 0.0
    for n in (4, 16, 64):
        spec = ModelSpec(kind="ring", n=n, lam=1.0, mu=1.0)
        g = spec.generator()
        pi = stationary_distribution(g)
        es = eigendecompose(g, pi)
        gammas_sq = coupling_coefficients(es, spec.observable_values(), pi)
        k = np.arange(1, n)
        closed = ring_eigenvalues(1.0, 1.0, n)[1:].real
        order = np.argsort(closed, kind="stable")
        closed_gamma_sq = np.array([ring_gamma_closed_form(n, int(i)) ** 2 for i in k])[order]
        ring_err = max(ring_err, _relative(es.omegas, closed[order]), _relative(gammas_sq, closed_gamma_sq))
    passed = toeplitz_err < ctx.tol(1e-9) and ring_err < ctx.tol(1e-9)
    return passed, {"toeplitz_max_relative_error": toeplitz_err, "ring_max_relative_error": ring_err}


def check_heavy_traffic(ctx: VerifyContext) -> tuple[bool, dict[str, Any]]:
    cfg = HeavyTrafficConfig(epsilon=1e-4, n=1000)
    p = cfg.toeplitz()
    i = np.arange(1, cfg.n + 1)
    omegas, modes = scipy.linalg.eigh_tridiagonal(np.full(cfg.n, p.b), np.full(cfg.n - 1, -np.sqrt(p.a * p.c)))
    # unnormalized projector convention, the one behind the sqrt(eps) n^2 / (pi k) estimate
    projections = modes.T @ (cfg.rho ** (i / 2.0) * i)
    gammas_sq = (1.0 - cfg.rho) * 0.5 * (cfg.n + 1) * projections**2
    fit = fit_scaling(LorentzianSpectrum(omegas, gammas_sq), (5, 100))
    k = np.arange(5, 101)
    ratio = np.sqrt(gammas_sq[k - 1]) / np.array([mm1_gamma_scaling(cfg, int(j)) for j in k])
    factor = float(np.max(np.maximum(ratio, 1.0 / ratio)))
    passed = (
        abs(fit.alpha - 2.0) <= ctx.tol(0.05)
        and abs(fit.beta + 1.0) <= ctx.tol(0.1)
        and factor <= 1.0 + ctx.tol(1.0)
    )
    return passed, {"alpha": fit.alpha, "beta": fit.beta, "max_gamma_ratio": factor}


def check_zeta_prediction(ctx: VerifyContext) -> tuple[bool, dict[str, Any]]:
    exponent = predict_zeta(2.0, -1.0)
    spec = open_mm1_spectrum(1.0, 1.0 + 1e-4, 1000)
    band = (float(spec.omegas[9]), float(spec.omegas[99]))
    omega = np.logspace(np.log10(band[0]), np.log10(band[1]), 400)
    slope = estimate_psd_slope(omega, analytic_psd(spec, omega), band)
    passed = exponent.zeta == -1.5 and abs(slope.slope + 1.5) <= ctx.tol(0.1)
    return passed, {"zeta_predicted": exponent.zeta, "slope": slope.slope, "band": list(band)}


def mm1_three_halves_band(eps: float, *, depth: float = 10.0) -> SlopeEstimate:
    """Decade where the analytic queue-length spectrum falls closest to ``f^(-3/2)``.

    The unbounded queue is stood in for by the reflecting chain cut at
    ``depth / eps`` states, which leaves less than ``exp(-depth)`` of the
    stationary mass beyond the cut. Past the spectral edge ``(√μ - √λ)² ≈ ε²/4``
    the slope crosses from 0 to -2, and the window is placed on that crossover.
    """
    n = int(np.ceil(depth / eps))
    rates = BirthDeathRates.constant(1.0, 1.0 + eps, n)
    spectrum = lorentzian_spectrum(eigendecompose_tridiagonal(rates, np.arange(n, dtype=float)))
    f_edge = eps**2 / (8.0 * np.pi)
    freqs = np.logspace(np.log10(f_edge) - 1.0, np.log10(f_edge) + 3.0, 161)
    return locate_slope_band(freqs, one_sided_psd(spectrum, freqs), -1.5)


def check_mm1_simulation(ctx: VerifyContext) -> tuple[bool, dict[str, Any]]:
    eps = 1e-3
    reference = mm1_three_halves_band(eps)
    model = BirthDeathCounter(1.0, 1.0 + eps)
    # 2^27 keeps dozens of periodogram bins inside the crossover decade
    cfg = SimConfig(seed=ctx.seed, t_end=2.0**27, sample_dt=16.0, n_realizations=32)
    pg = averaged_periodogram(model, cfg, progress=ctx.progress)
    expected = mm1_moments(model.lam, model.mu).mean
    mid = estimate_psd_slope(pg.freqs, pg.power, reference.band)
    high = estimate_psd_slope(pg.freqs, pg.power, (pg.nyquist / 40.0, pg.nyquist / 4.0))
    mean_err = abs(pg.mean - expected) / expected
    passed = (
        abs(reference.slope + 1.5) <= ctx.tol(0.05)
        and mean_err <= ctx.tol(0.15)
        and abs(mid.slope + 1.5) <= ctx.tol(0.15)
        and abs(high.slope + 2.0) <= ctx.tol(0.15)
    )
    return passed, {
        "time_average": pg.mean,
        "expected_mean": expected,
        "analytic_mid_slope": reference.slope,
        "mid_slope": mid.slope,
        "mid_band": list(mid.band),
        "high_slope": high.slope,
        "high_band": list(high.band),
    }


def check_ring_simulation(ctx: VerifyContext) -> tuple[bool, dict[str, Any]]:
    spec = ModelSpec(kind="ring", n=1000, lam=1.0, mu=1.0)
    g = spec.generator()
    pi = stationary_distribution(g)
    model = FiniteChain.from_generator(g, pi, spec.observable_values())
    cfg = SimConfig(seed=ctx.seed, t_end=2.0**17, sample_dt=0.125, n_realizations=30)
    pg = averaged_periodogram(model, cfg, progress=ctx.progress)
    slope = estimate_psd_slope(pg.freqs, pg.power, (1e-3, 1e-2))
    return abs(slope.slope + 1.5) <= ctx.tol(0.15), {"slope": slope.slope, "stderr": slope.stderr, "band": list(slope.band)}


def check_star(ctx: VerifyContext) -> tuple[bool, dict[str, Any]]:
    n = 100
    g = star_generator(1.0, 1.0, n)
    pi = stationary_distribution(g)
    eigvals = scipy.linalg.eigvalsh(g.entries)
    distinct = int(degenerate_groups(np.sort(eigvals))[-1] + 1)
    model = FiniteChain.from_generator(g, pi)
    cfg = SimConfig(seed=ctx.seed, t_end=2.0**17 * 0.0025, sample_dt=0.0025, n_realizations=20)
    pg = averaged_periodogram(model, cfg, progress=ctx.progress)
    centres, power = log_binned(pg.freqs, pg.power, (2.0 * pg.df, 10.0 / (2.0 * np.pi)))
    fit = fit_lorentzian(centres, power)
    passed = distinct == 3 and abs(fit.knee - 1.0) <= ctx.tol(0.2)
    return passed, {"distinct_eigenvalues": distinct, "knee": fit.knee, "fit_residual": fit.residual}


def check_asymptotics(ctx: VerifyContext) -> tuple[bool, dict[str, Any]]:
    worst = 0.0
    omega_bars = (1e3, 1e6) if ctx.quick else (1e3, 1e4, 1e5, 1e6)
    for alpha, beta in ((2.0, -1.0), (2.0, -0.5), (3.0, -1.0)):
        for omega_bar in omega_bars:
            worst = max(worst, _relative(asymptotic_psd(alpha, beta, omega_bar), lorentzian_sum_direct(alpha, beta, omega_bar)))
    zero = lorentzian_sum_direct(2.0, -1.0, 0.0)
    zero_err = _relative(zero, scipy.special.zeta(4.0))
    passed = worst < ctx.tol(0.01) and zero_err < ctx.tol(1e-6)
    return passed, {"max_relative_error": worst, "zero_frequency": zero, "zero_frequency_error": zero_err}


def check_identities(ctx: VerifyContext) -> tuple[bool, dict[str, Any]]:
    rng = ctx.rng(9)
    rates = random_birth_death(rng, 8)
    g = rates.generator()
    pi = rates.stationary()
    x = rng.normal(size=rates.n)
    es = eigendecompose(g, pi)
    es = es.with_couplings(coupling_coefficients(es, x, pi))
    spec = lorentzian_spectrum(es)

    diffusion_err = max(
        _relative(diffusion_coefficient(es), analytic_psd(spec, 0.0)),
        _relative(resolvent_psd(g, pi, x, 0.0), analytic_psd(spec, 0.0)),
    )
    centred = x - pi_inner_product(x, np.ones(rates.n), pi)
    variance_err = _relative(spec.variance, pi_inner_product(centred, centred, pi))

    series = rng.normal(size=2**12)
    pg = periodogram(series, 0.5)
    parseval_err = _relative(pg.total_power(), np.var(series))

    z = generalized_fundamental_matrix(g, pi, 0.0, es)
    a = g.entries
    scale = float(np.max(np.abs(a)))
    axiom_err = max(
        float(np.max(np.abs(a @ z @ a - a))) / scale,
        float(np.max(np.abs(z @ a @ z - z))) / float(np.max(np.abs(z))),
        float(np.max(np.abs(a @ z - z @ a))),
    )
    passed = (
        diffusion_err < ctx.tol(1e-10)
        and variance_err < ctx.tol(1e-9)
        and parseval_err < ctx.tol(1e-9)
        and axiom_err < ctx.tol(1e-9)
    )
    return passed, {
        "diffusion_error": diffusion_err,
        "variance_error": variance_err,
        "parseval_error": parseval_err,
        "group_inverse_error": axiom_err,
    }


def check_interlacing(ctx: VerifyContext) -> tuple[bool, dict[str, Any]]:
    rng = ctx.rng(10)
    violations = 0
    instances = 10 if ctx.quick else 50
    for _ in range(instances):
        rates = random_birth_death(rng, int(rng.integers(3, 11)))
        previous = char_poly_roots(rates, 1)
        for m in range(2, rates.n + 1):
            roots = char_poly_roots(rates, m)
            if not (np.all(roots[:-1] < previous) and np.all(previous < roots[1:])):
                violations += 1
            previous = roots

    n = 6
    rates = BirthDeathRates.constant(1.0, 1.0, n)
    spectrum = char_poly_roots(rates, boundary="open")
    i = np.arange(1, n + 1)
    residual = 0.0
    for k, omega in enumerate(spectrum, start=1):
        psi, q_sq = birth_death_eigvec_coeffs(rates, omega, boundary="open", spectrum=spectrum)
        v = np.sqrt(q_sq) * psi
        mode = np.sqrt(2.0 / (n + 1)) * np.sin(k * i * np.pi / (n + 1))
        residual = max(residual, min(float(np.linalg.norm(v - mode)), float(np.linalg.norm(v + mode))))
    passed = violations == 0 and residual < ctx.tol(1e-8)
    return passed, {"instances": instances, "violations": violations, "sine_mode_residual": residual}


Check = Callable[[VerifyContext], tuple[bool, dict[str, Any]]]

# (name, check, runs in quick mode)
CHECKS: tuple[tuple[str, Check, bool], ...] = (
    ("lorentzian_oracle", check_lorentzian_oracle, True),
    ("closed_forms", check_closed_forms, True),
    ("heavy_traffic_scaling", check_heavy_traffic, True),
    ("zeta_prediction", check_zeta_prediction, True),
    ("mm1_simulation", check_mm1_simulation, False),
    ("ring_simulation", check_ring_simulation, False),
    ("star_graph", check_star, False),
    ("asymptotic_closed_forms", check_asymptotics, True),
    ("consistency_identities", check_identities, True),
    ("interlacing", check_interlacing, True),
)


def run_checks(ctx: VerifyContext, only: set[str] | None = None) -> list[CheckResult]:
    selected = [c for c in CHECKS if only is None or c[0] in only]
    results: list[CheckResult] = []
    with ProgressReporter(len(selected), "Verify", unit="check", enabled=ctx.progress) as reporter:
        for name, check, in_quick in selected:
            if ctx.quick and not in_quick:
                logger.warning("Skipping %s in quick mode", name)
                results.append(CheckResult(name, passed=True, seconds=0.0, skipped=True))
                reporter.step(f"{name} skipped")
                continue
            start = time.perf_counter()
            try:
                passed, details = check(ctx)
            except ValueError as exc:
                logger.error("%s raised: %s", name, exc)
                passed, details = False, {"error": str(exc)}
            result = CheckResult(name, passed=bool(passed), seconds=time.perf_counter() - start, details=details)
            (logger.info if result.passed else logger.error)(
                "%s %s (%.1f s)", name, "passed" if result.passed else "FAILED", result.seconds
            )
            results.append(result)
            reporter.step(name)
    return results


def cmd_verify(
    out_dir: str | Path,
    *,
    seed: int = 0,
    quick: bool = False,
    tolerance_scale: float = 1.0,
    progress: bool = True,
    only: set[str] | None = None,
) -> tuple[bool, dict[str, Any]]:
    ctx = VerifyContext(seed=seed, quick=quick, tolerance_scale=tolerance_scale, progress=progress)
    results = run_checks(ctx, only)
    ok = all(r.passed for r in results)
    report = {
        "ok": ok,
        "quick": quick,
        "seed": seed,
        "tolerance_scale": tolerance_scale,
        "checks": [r.to_dict() for r in results],
    }
    write_json(ensure_run_dir(out_dir) / "verify.json", report)
    return ok, report

from __future__ import annotations

import numpy as np
import pytest
import scipy.integrate
from numpy.testing import assert_allclose

from ctmc_noise.analysis import (
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
from ctmc_noise.chain import (
    BirthDeathRates,
    Generator,
    NotReversibleError,
    ReducibleChainError,
    StationaryDistribution,
    group_inverse,
    matrix_autocorrelation,
    resolvent_psd,
    ring_generator,
    stationary_distribution,
    telegraph_generator,
)


def _decomposed(g: Generator, x: np.ndarray):
    pi = stationary_distribution(g)
    es = eigendecompose(g, pi)
    return pi, es.with_couplings(coupling_coefficients(es, x, pi))


def test_telegraph_is_a_single_lorentzian():
    lam, mu = 1.0, 3.0
    g = telegraph_generator(lam, mu)
    pi, es = _decomposed(g, np.array([0.0, 1.0]))
    assert_allclose(es.omegas, [lam + mu])
    p = lam / (lam + mu)
    assert_allclose(es.gammas_sq, [p * (1.0 - p)])
    spec = lorentzian_spectrum(es)
    omega = np.array([0.0, 1.0, 10.0])
    assert_allclose(spec(omega), p * (1.0 - p) * 4.0 / (16.0 + omega**2))


def test_ring_couplings_and_grouping():
    g = ring_generator(1.0, 1.0, 4)
    x = np.arange(4, dtype=float)
    pi, es = _decomposed(g, x)
    assert_allclose(es.omegas, [2.0, 2.0, 4.0], atol=1e-12)
    assert_allclose(es.gammas_sq, [0.5, 0.5, 0.25], atol=1e-12)
    assert es.gammas_sq.sum() == pytest.approx(1.25)
    spec = lorentzian_spectrum(es)
    assert len(spec) == 2
    assert_allclose(spec.gammas_sq, [1.0, 0.25], atol=1e-12)


def test_eigenvectors_diagonalize_generator(random_rates):
    g = random_rates(7).generator()
    pi = stationary_distribution(g)
    es = eigendecompose(g, pi)
    for k in range(es.omegas.size):
        assert_allclose(g.entries @ es.right[:, k], es.omegas[k] * es.right[:, k], atol=1e-10)
        assert es.left[:, k] @ es.right[:, k] == pytest.approx(1.0)
    completeness = pi.projector() + sum(es.projector(k) for k in range(es.omegas.size))
    assert_allclose(completeness, np.eye(7), atol=1e-10)


def test_variance_is_sum_of_couplings(random_rates):
    g = random_rates(9).generator()
    x = np.linspace(-1.0, 3.0, 9)
    pi, es = _decomposed(g, x)
    mean = pi.pi @ x
    assert es.gammas_sq.sum() == pytest.approx(pi.pi @ (x - mean) ** 2, rel=1e-10)


def test_resolvent_and_cosine_transform_agree(random_rates):
    g = random_rates(5).generator()
    x = np.arange(5, dtype=float)
    pi, es = _decomposed(g, x)
    spec = lorentzian_spectrum(es)
    for omega in (0.0, 0.3, 2.0):
        s = analytic_psd(spec, omega)
        assert resolvent_psd(g, pi, x, omega) == pytest.approx(s, rel=1e-9)
        assert cosine_transform_psd(g, pi, x, omega) == pytest.approx(s, rel=1e-6)


def test_diffusion_is_zero_frequency_psd(random_rates):
    g = random_rates(6).generator()
    pi, es = _decomposed(g, np.arange(6, dtype=float))
    spec = lorentzian_spectrum(es)
    assert diffusion_coefficient(es) == pytest.approx(analytic_psd(spec, 0.0), rel=1e-12)
    assert spec.diffusion == pytest.approx(diffusion_coefficient(spec), rel=1e-12)


def test_autocorrelation_matches_matrix_exponential(random_rates):
    g = random_rates(6).generator()
    x = np.arange(6, dtype=float)
    pi, es = _decomposed(g, x)
    for tau in (0.0, 0.5, 3.0):
        assert autocorrelation(es, tau) == pytest.approx(matrix_autocorrelation(g, pi, x, tau), rel=1e-9, abs=1e-12)


def test_fundamental_matrix_identities(random_rates):
    g = random_rates(6).generator()
    pi = stationary_distribution(g)
    es = eigendecompose(g, pi)
    assert_allclose(generalized_fundamental_matrix(g, pi, 0.0, es), group_inverse(g, pi), atol=1e-9)
    for omega in (0.5, 2.0):
        assert_allclose(
            generalized_fundamental_matrix(g, pi, omega, es),
            fundamental_matrix_composition(g, pi, omega),
            atol=1e-9,
        )


def test_non_reversible_chain_rejected():
    cycle = Generator(np.array([[1.0, -1.0, 0.0], [0.0, 1.0, -1.0], [-1.0, 0.0, 1.0]]))
    pi = stationary_distribution(cycle)
    with pytest.raises(NotReversibleError):
        eigendecompose(cycle, pi)
    with pytest.raises(NotReversibleError):
        fundamental_matrix_composition(cycle, pi, 1.0)


def test_reducible_symmetric_chain_rejected():
    block = np.array([[1.0, -1.0], [-1.0, 1.0]])
    g = Generator(np.block([[block, np.zeros((2, 2))], [np.zeros((2, 2)), block]]))
    pi = StationaryDistribution(np.full(4, 0.25))
    with pytest.raises(ReducibleChainError):
        eigendecompose(g, pi)


def test_degenerate_groups():
    labels = degenerate_groups(np.array([1.0, 1.0 + 1e-12, 2.0, 3.0, 3.0]))
    assert labels.tolist() == [0, 0, 1, 2, 2]


def test_tridiagonal_path_matches_dense(random_rates):
    rates = random_rates(40)
    x = np.arange(40, dtype=float)
    g = rates.generator()
    _, dense = _decomposed(g, x)
    banded = eigendecompose_tridiagonal(rates, x, block=7)
    assert_allclose(banded.omegas, dense.omegas, rtol=1e-9)
    assert_allclose(banded.gammas_sq, dense.gammas_sq, rtol=1e-7, atol=1e-12 * dense.gammas_sq.max())
    assert_allclose(eigendecompose_tridiagonal(g, x).gammas_sq, banded.gammas_sq, rtol=1e-9, atol=1e-14)


def test_generator_spectrum_dispatch(random_rates):
    g = random_rates(10).generator()
    x = np.arange(10, dtype=float)
    spec = generator_spectrum(g, x)
    pi, es = _decomposed(g, x)
    assert_allclose(spec.gammas_sq, lorentzian_spectrum(es).gammas_sq, rtol=1e-10)


def test_missing_couplings_or_vectors():
    es = EigenStructure(np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        lorentzian_spectrum(es)
    with pytest.raises(ValueError):
        es.right
    with pytest.raises(ValueError):
        EigenStructure(np.array([0.0, 1.0]))


def _laplacian_modes(g: Generator):
    return eigendecompose(g, stationary_distribution(g))


def test_graph_fourier_transform_of_ring_index():
    es = _laplacian_modes(ring_generator(1.0, 1.0, 4))
    assert_allclose(es.omegas, [2.0, 2.0, 4.0], atol=1e-12)
    x_hat = graph_fourier_transform(np.arange(4, dtype=float), es)
    # the omega = 2 eigenspace is two-dimensional; compare its total, split per mode
    per_mode = np.sqrt(np.sum(x_hat[:2] ** 2) / 2.0)
    assert per_mode / np.sqrt(4.0) == pytest.approx(1.0 / np.sqrt(2.0), rel=1e-10)
    assert abs(x_hat[2]) / np.sqrt(4.0) == pytest.approx(0.5, rel=1e-10)


def test_graph_fourier_transform_of_constant_vanishes():
    es = _laplacian_modes(ring_generator(1.0, 1.0, 7))
    assert_allclose(graph_fourier_transform(np.full(7, 3.0), es), 0.0, atol=1e-12)


def test_graph_fourier_transform_of_a_mode_is_a_delta():
    es = _laplacian_modes(BirthDeathRates.constant(1.0, 1.0, 5).generator())
    assert np.all(np.diff(es.omegas) > 1e-3)
    assert_allclose(graph_fourier_transform(es.basis[:, 1], es), np.eye(4)[1], atol=1e-12)


def test_graph_fourier_transform_rejects_asymmetric_generator():
    es = _laplacian_modes(telegraph_generator(1.0, 3.0))
    with pytest.raises(NotReversibleError):
        graph_fourier_transform(np.array([0.0, 1.0]), es)
    symmetric = _laplacian_modes(ring_generator(1.0, 1.0, 4))
    with pytest.raises(ValueError):
        graph_fourier_transform(np.zeros(3), symmetric)


def test_graph_psd_variance():
    n = 8
    g = ring_generator(1.0, 1.0, n)
    pi = stationary_distribution(g)
    es = eigendecompose(g, pi)
    x = np.cos(2.0 * np.pi * np.arange(n) / n) + 0.3 * np.arange(n)
    spec = graph_psd(x, es)
    assert spec.variance == pytest.approx(np.var(x), rel=1e-10)


def test_energy_normalization():
    spec = LorentzianSpectrum(np.array([0.5, 2.0, 7.0]), np.array([1.0, 0.3, 0.1]))
    raw, _ = scipy.integrate.quad(lambda w: analytic_psd(spec, w), 0.0, np.inf, epsabs=0.0, epsrel=1e-10, limit=500)
    assert spec.energy == pytest.approx(raw, rel=1e-7)
    energy = spec.as_mode("energy")
    assert energy.energy == pytest.approx(spec.variance, rel=1e-12)
    assert analytic_psd(energy, 1.0) == pytest.approx(2.0 / np.pi * analytic_psd(spec, 1.0))


def test_lorentzian_spectrum_validation():
    with pytest.raises(ValueError):
        LorentzianSpectrum(np.array([1.0, -1.0]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        analytic_psd(LorentzianSpectrum(np.array([1.0]), np.array([1.0])), -1.0)


def test_sampled_psd_integrates_to_variance():
    spec = LorentzianSpectrum(np.array([2.0]), np.array([0.25]))
    dt, n = 0.1, 2**12
    freqs = np.arange(1, n // 2 + 1) / (n * dt)
    power = sampled_psd(spec, freqs, dt)
    assert np.sum(power) * freqs[0] == pytest.approx(0.25, rel=5e-3)


def test_sampled_psd_small_step_limit():
    spec = LorentzianSpectrum(np.array([0.5, 3.0]), np.array([1.0, 0.2]))
    freqs = np.array([0.01, 0.1, 0.5])
    assert_allclose(sampled_psd(spec, freqs, 1e-4), one_sided_psd(spec, freqs), rtol=1e-3)

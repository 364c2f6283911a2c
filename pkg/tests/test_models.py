from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg
from numpy.testing import assert_allclose

from ctmc_noise.analysis import eigendecompose_tridiagonal, generator_spectrum
from ctmc_noise.chain import (
    BirthDeathRates,
    HeavyTrafficConfig,
    ModelSpec,
    ToeplitzParams,
    light_traffic_eigenvalues,
    mm1_gamma_scaling,
    mm1_generator,
    mm1_moments,
    open_mm1_spectrum,
    ring_eigenvalues,
    ring_generator,
    star_generator,
    stationary_distribution,
    telegraph_generator,
    toeplitz_eigenvalues,
    toeplitz_eigenvectors,
    validate_generator,
)


def test_toeplitz_eigenvalues_match_dense():
    p = ToeplitzParams(a=-2.0, b=3.0, c=-1.0, n=10)
    expected = np.sort(np.linalg.eigvals(p.matrix()).real)
    assert_allclose(np.sort(toeplitz_eigenvalues(p)), expected, rtol=1e-10)


def test_toeplitz_matrix_layout():
    p = ToeplitzParams.for_queue(1.0, 2.0, 4)
    m = p.matrix()
    assert m[1, 0] == -2.0
    assert m[0, 1] == -1.0
    assert_allclose(np.diag(m), 3.0)


def test_toeplitz_eigenvectors():
    p = ToeplitzParams(a=-1.5, b=2.5, c=-1.0, n=12)
    eigs = toeplitz_eigenvalues(p)
    for k in (1, 5, 12):
        modes = toeplitz_eigenvectors(p, k)
        assert_allclose(p.matrix() @ modes.right, eigs[k - 1] * modes.right, atol=1e-10)
        assert_allclose(modes.left @ p.matrix(), eigs[k - 1] * modes.left, atol=1e-10)
        assert modes.normalizer * (modes.left @ modes.right) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        toeplitz_eigenvectors(p, 0)


def test_toeplitz_params_validation():
    with pytest.raises(ValueError):
        ToeplitzParams(a=1.0, b=2.0, c=-1.0, n=3)
    with pytest.raises(ValueError):
        ToeplitzParams(a=-1.0, b=0.0, c=-1.0, n=3)


def test_reflecting_queue_close_to_toeplitz():
    lam, mu, n = 1.0, 1.0 + 1e-4, 1000
    rates = BirthDeathRates.constant(lam, mu, n)
    reflecting = eigendecompose_tridiagonal(rates, np.arange(n, dtype=float)).omegas
    open_modes = toeplitz_eigenvalues(ToeplitzParams.for_queue(lam, mu, n))
    k = np.arange(10, 501)
    assert_allclose(reflecting[k - 1], open_modes[k - 1], rtol=0.01)


def test_light_traffic_eigenvalues_collapse():
    for eps in (1e-2, 1e-4):
        eigs = light_traffic_eigenvalues(eps, 50)
        assert np.max(np.abs(eigs - 1.0)) <= 2.0 * np.sqrt(eps) + eps


def test_light_traffic_generator_spectrum_collapses_onto_mu():
    lam, n = 1e-6, 20
    spec = generator_spectrum(mm1_generator(lam, 1.0, n), np.arange(n, dtype=float))
    assert len(spec) == n - 1
    assert np.max(np.abs(spec.omegas - 1.0)) <= 2.0 * np.sqrt(lam) + lam


def test_heavy_traffic_config():
    cfg = HeavyTrafficConfig(epsilon=1e-3)
    assert cfg.lam == 1.0
    assert cfg.mu == pytest.approx(1.001)
    assert cfg.rho == pytest.approx(1.0 / 1.001)
    assert cfg.toeplitz().b == pytest.approx(2.001)
    with pytest.raises(ValueError):
        HeavyTrafficConfig(epsilon=1.5)
    with pytest.raises(ValueError):
        HeavyTrafficConfig(epsilon=1e-3, n=10)


def test_gamma_scaling_estimate():
    cfg = HeavyTrafficConfig(epsilon=1e-4, n=1000)
    assert mm1_gamma_scaling(cfg, 1) == pytest.approx(1e-2 * 1e6 / np.pi)
    assert mm1_gamma_scaling(cfg, 10) == pytest.approx(mm1_gamma_scaling(cfg, 1) / 10.0)
    with pytest.raises(ValueError):
        mm1_gamma_scaling(cfg, 101)


def test_open_queue_variance_is_second_moment():
    lam, mu, n = 1.0, 2.0, 50
    spec = open_mm1_spectrum(lam, mu, n)
    i = np.arange(1, n + 1)
    pi = (lam / mu) ** i
    pi /= pi.sum()
    assert spec.variance == pytest.approx(float(pi @ i**2), rel=1e-10)


def test_open_queue_couplings_match_symmetrized_eigenvectors():
    lam, mu, n = 1.0, 1.5, 20
    spec = open_mm1_spectrum(lam, mu, n)
    i = np.arange(1, n + 1)
    pi = (lam / mu) ** i
    pi /= pi.sum()
    omegas, vecs = scipy.linalg.eigh_tridiagonal(np.full(n, lam + mu), np.full(n - 1, -np.sqrt(lam * mu)))
    gammas_sq = (vecs.T @ (np.sqrt(pi) * i)) ** 2
    assert_allclose(spec.omegas, omegas, rtol=1e-10)
    assert_allclose(spec.gammas_sq, gammas_sq, rtol=1e-8, atol=1e-12 * gammas_sq.max())


def test_unnormalized_open_queue_needs_stable_rates():
    with pytest.raises(ValueError):
        open_mm1_spectrum(2.0, 1.0, 10, normalize_projector=False)


def test_mm1_moments():
    moments = mm1_moments(1.0, 2.0)
    assert moments.mean == pytest.approx(1.0)
    assert moments.variance == pytest.approx(2.0)
    with pytest.raises(ValueError):
        mm1_moments(2.0, 1.0)


def test_ring_spectrum():
    g = ring_generator(1.0, 1.0, 4)
    assert validate_generator(g).ok
    assert_allclose(np.sort(np.linalg.eigvalsh(g.entries)), [0.0, 2.0, 2.0, 4.0], atol=1e-12)

    g = ring_generator(1.0, 2.0, 7)
    dense = np.linalg.eigvals(g.entries)
    for value in ring_eigenvalues(1.0, 2.0, 7):
        assert np.min(np.abs(dense - value)) < 1e-10
    assert_allclose(stationary_distribution(g).pi, np.full(7, 1.0 / 7.0))


def test_star_spectrum():
    n = 5
    g = star_generator(1.0, 1.0, n)
    assert g.n == n + 1
    assert validate_generator(g).ok
    eigs = np.sort(np.linalg.eigvals(g.entries).real)
    assert_allclose(eigs, [0.0] + [1.0] * (n - 1) + [n + 1.0], atol=1e-10)
    assert telegraph_generator(1.0, 3.0).n == 2


def test_model_spec_round_trip():
    spec = ModelSpec(kind="birth-death", lambdas=(1.0, 2.0), mus=(0.5, 1.5), observable="centred")
    assert ModelSpec.from_config(spec.to_config()) == spec
    assert spec.n_states == 3
    assert spec.generator().structure_tag == "tridiagonal"


def test_model_spec_heavy_traffic_rates():
    spec = ModelSpec(kind="mm1-open", n=100, eps=1e-2)
    assert spec.rates == (1.0, 1.01)
    assert spec.is_closed_form
    assert spec.observable_values()[0] == 1.0
    assert ModelSpec(kind="ring", n=5, eps=1e-2, lam=2.0, mu=3.0).rates == (2.0, 3.0)


def test_model_spec_default_rates_per_kind():
    assert ModelSpec(kind="mm1").rates == (1.0, 2.0)
    for kind in ("ring", "star", "telegraph"):
        assert ModelSpec(kind=kind, n=8).rates == (1.0, 1.0)
    assert ModelSpec(kind="ring", n=8, mu=3.0).rates == (1.0, 3.0)
    spec = ModelSpec.from_config({"model": "ring", "n": 8})
    assert spec.lam is None and spec.mu is None
    assert ModelSpec.from_config(spec.to_config()) == spec


def test_model_spec_centred_observable():
    spec = ModelSpec(kind="mm1", n=6, lam=1.0, mu=2.0, observable="centred")
    pi = spec.birth_death_rates().stationary().pi
    assert float(pi @ spec.observable_values(pi)) == pytest.approx(0.0, abs=1e-14)


def test_model_spec_errors():
    with pytest.raises(ValueError):
        ModelSpec(kind="lattice")
    with pytest.raises(ValueError):
        ModelSpec(kind="mm1", eps=2.0)
    with pytest.raises(ValueError):
        ModelSpec(observable="squared")
    with pytest.raises(ValueError):
        ModelSpec(kind="birth-death").generator()
    with pytest.raises(ValueError):
        ModelSpec(kind="mm1-open").generator()

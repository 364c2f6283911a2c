from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ctmc_noise.chain import (
    BirthDeathRates,
    birth_death_char_polys,
    birth_death_eigvec_coeffs,
    char_poly_roots,
)


def test_rates_validation():
    with pytest.raises(ValueError):
        BirthDeathRates(np.ones(3), np.ones(2))
    with pytest.raises(ValueError):
        BirthDeathRates(np.array([1.0, 0.0]), np.ones(2))
    with pytest.raises(ValueError):
        BirthDeathRates.constant(1.0, 1.0, 1)


def test_matrix_rows_sum_to_zero(random_rates):
    rates = random_rates(7)
    assert_allclose(rates.matrix().sum(axis=1), 0.0, atol=1e-14)
    open_rows = rates.matrix("open").sum(axis=1)
    assert open_rows[0] == pytest.approx(rates.mus[0])
    assert open_rows[-1] == pytest.approx(rates.lambdas[-1])


def test_recurrence_initial_terms(random_rates):
    rates = random_rates(5)
    polys = birth_death_char_polys(rates, rates.lambdas[0], upto=2)
    assert polys[0] == 1.0
    assert polys[1] == pytest.approx(0.0, abs=1e-15)


def test_recurrence_matches_determinants(random_rates):
    rates = random_rates(6)
    x = 0.37
    polys = birth_death_char_polys(rates, x)
    full = rates.matrix()
    for m in range(1, rates.n + 1):
        assert polys[m] == pytest.approx(np.linalg.det(full[:m, :m] - x * np.eye(m)), rel=1e-9, abs=1e-12)


def test_roots_match_dense_eigenvalues(random_rates):
    rates = random_rates(10)
    full = rates.matrix()
    expected = np.sort(np.linalg.eigvals(full).real)
    roots = char_poly_roots(rates)
    assert_allclose(roots, expected, rtol=1e-9, atol=1e-10)
    assert roots[0] == pytest.approx(0.0, abs=1e-10)
    for m in (1, 4, 9):
        block = np.sort(np.linalg.eigvals(full[:m, :m]).real)
        assert_allclose(char_poly_roots(rates, m), block, rtol=1e-9, atol=1e-12)


def test_roots_strictly_interlace(random_rates):
    for _ in range(50):
        rates = random_rates(8)
        previous = char_poly_roots(rates, 1)
        for m in range(2, rates.n + 1):
            current = char_poly_roots(rates, m)
            assert np.all(current[:-1] < previous)
            assert np.all(previous < current[1:])
            previous = current


def test_open_boundary_sine_modes():
    rates = BirthDeathRates.constant(1.0, 1.0, 6)
    k = np.arange(1, 7)
    expected = 2.0 - 2.0 * np.cos(k * np.pi / 7.0)
    assert_allclose(char_poly_roots(rates, boundary="open"), expected, rtol=1e-8)


def test_symmetric_chain_eigenvectors_are_normalized(random_rates):
    rates = random_rates(9, symmetric=True)
    full = rates.matrix()
    spectrum = char_poly_roots(rates)
    for omega in spectrum[1:]:
        psi, q_sq = birth_death_eigvec_coeffs(rates, omega, spectrum=spectrum)
        assert_allclose(full @ psi, omega * psi, atol=1e-8 * np.max(np.abs(psi)) * np.max(spectrum))
        assert q_sq * np.sum(psi**2) == pytest.approx(1.0, rel=1e-8)


def test_degenerate_eigenvalue_rejected():
    rates = BirthDeathRates.constant(1.0, 1.0, 4)
    with pytest.raises(ValueError, match="degenerate"):
        birth_death_eigvec_coeffs(rates, 1.0, spectrum=np.array([0.0, 1.0, 1.0, 3.0]))

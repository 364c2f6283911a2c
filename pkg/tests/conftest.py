from __future__ import annotations

import numpy as np
import pytest

from ctmc_noise.chain import BirthDeathRates


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def random_rates(rng):
    """Factory for birth-death chains with rates drawn from [0.2, 2]."""

    def make(n: int, *, symmetric: bool = False) -> BirthDeathRates:
        lambdas = rng.uniform(0.2, 2.0, n - 1)
        mus = lambdas.copy() if symmetric else rng.uniform(0.2, 2.0, n - 1)
        return BirthDeathRates(lambdas, mus)

    return make

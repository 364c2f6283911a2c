"""Birth-death chains: rates, characteristic polynomials and their roots."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.optimize
from numpy.typing import ArrayLike

from .generator import Generator, StationaryDistribution, product_form_stationary

Boundary = Literal["reflecting", "open"]

# Values above this are rescaled while running the recurrence for root finding.
_RESCALE_AT = 1e150
DEGENERACY_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class BirthDeathRates:
    """Births ``λ_0..λ_{n-2}`` and deaths ``μ_1..μ_{n-1}`` of an n-state chain."""

    lambdas: np.ndarray
    mus: np.ndarray

    def __post_init__(self) -> None:
        lambdas = np.array(self.lambdas, dtype=float).ravel()
        mus = np.array(self.mus, dtype=float).ravel()
        if lambdas.size != mus.size:
            raise ValueError(f"{lambdas.size} birth rates for {mus.size} death rates")
        if lambdas.size < 1:
            raise ValueError("a birth-death chain needs at least 2 states")
        if np.any(lambdas <= 0.0) or np.any(mus <= 0.0) or not np.all(np.isfinite(lambdas) & np.isfinite(mus)):
            raise ValueError("birth and death rates must be positive and finite")
        lambdas.setflags(write=False)
        mus.setflags(write=False)
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "mus", mus)

    @classmethod
    def constant(cls, lam: float, mu: float, n: int) -> BirthDeathRates:
        if n < 2:
            raise ValueError(f"n must be >= 2 (got {n})")
        return cls(np.full(n - 1, float(lam)), np.full(n - 1, float(mu)))

    @property
    def n(self) -> int:
        return self.lambdas.size + 1

    @property
    def utilizations(self) -> np.ndarray:
        """``ρ_i = λ_{i-1} / μ_i`` for i = 1..n-1."""
        return self.lambdas / self.mus

    def diagonal(self, boundary: Boundary = "reflecting") -> np.ndarray:
        diag = np.empty(self.n)
        diag[0] = self.lambdas[0]
        diag[1:-1] = self.lambdas[1:] + self.mus[:-1]
        diag[-1] = self.mus[-1]
        if boundary == "open":
            diag[0] += self.mus[0]
            diag[-1] += self.lambdas[-1]
        elif boundary != "reflecting":
            raise ValueError(f"unknown boundary {boundary!r}")
        return diag

    def off_diagonal_products(self) -> np.ndarray:
        """``λ_{i-1} μ_i``, the squared off-diagonal of the symmetrized matrix."""
        return self.lambdas * self.mus

    def matrix(self, boundary: Boundary = "reflecting") -> np.ndarray:
        return np.diag(self.diagonal(boundary)) - np.diag(self.lambdas, 1) - np.diag(self.mus, -1)

    def generator(self) -> Generator:
        return Generator(self.matrix("reflecting"), structure_tag="tridiagonal")

    def stationary(self) -> StationaryDistribution:
        return StationaryDistribution(product_form_stationary(self.lambdas, self.mus))


def birth_death_char_polys(
    r: BirthDeathRates,
    x: ArrayLike,
    upto: int | None = None,
    *,
    boundary: Boundary = "reflecting",
) -> np.ndarray:
    """Evaluate ``f_0(x)..f_upto(x)`` by the three-term recurrence.

    ``f_m`` is the characteristic polynomial ``det(G_m - x)`` of the leading
    m x m block. With ``upto = n`` the last diagonal entry follows the chosen
    boundary, so ``f_n`` is the characteristic polynomial of the full matrix.
    Returns an array of shape ``(upto + 1,) + shape(x)``.
    """
    upto = r.n if upto is None else int(upto)
    if not 0 <= upto <= r.n:
        raise ValueError(f"upto must be in [0, {r.n}] (got {upto})")
    x = np.asarray(x, dtype=float)
    diag = r.diagonal(boundary)
    couplings = r.off_diagonal_products()

    values = np.empty((upto + 1,) + x.shape)
    values[0] = 1.0
    if upto >= 1:
        values[1] = diag[0] - x
    for m in range(1, upto):
        values[m + 1] = (diag[m] - x) * values[m] - couplings[m - 1] * values[m - 1]
    return values


def _scaled_char_poly(diag: np.ndarray, couplings: np.ndarray, x: float) -> float:
    prev, cur = 1.0, diag[0] - x
    for m in range(1, diag.size):
        prev, cur = cur, (diag[m] - x) * cur - couplings[m - 1] * prev
        scale = max(abs(cur), abs(prev))
        if scale > _RESCALE_AT:
            prev /= scale
            cur /= scale
    return cur


def char_poly_roots(r: BirthDeathRates, m: int | None = None, *, boundary: Boundary = "reflecting") -> np.ndarray:
    """Sorted roots of ``f_m`` by bisection, bracketed by the roots of ``f_{m-1}``."""
    m = r.n if m is None else int(m)
    if not 1 <= m <= r.n:
        raise ValueError(f"m must be in [1, {r.n}] (got {m})")
    # rows above the last one do not see the boundary closure
    diag = r.diagonal(boundary)[:m]
    couplings = r.off_diagonal_products()
    # Gershgorin: every root lies in [0, max(d_i + |off-diagonal row sum|)]
    radius = np.zeros(m)
    radius[:-1] += r.lambdas[: m - 1]
    radius[1:] += r.mus[: m - 1]
    upper = float(np.max(diag + radius)) * (1.0 + 1e-9) + 1e-300
    lower = -1e-9 * upper

    roots = np.array([diag[0]])
    for size in range(2, m + 1):
        block = diag[:size]
        edges = np.concatenate(([lower], roots, [upper]))

        def f(x: float, block: np.ndarray = block) -> float:
            return _scaled_char_poly(block, couplings, x)

        new_roots = np.empty(size)
        for i in range(size):
            a, b = edges[i], edges[i + 1]
            new_roots[i] = scipy.optimize.bisect(f, a, b, xtol=1e-15 * upper, rtol=4 * np.finfo(float).eps, maxiter=400)
        roots = new_roots
    return roots


def birth_death_eigvec_coeffs(
    r: BirthDeathRates,
    omega_k: float,
    *,
    boundary: Boundary = "reflecting",
    spectrum: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Orthogonal-polynomial eigenvector ``v_i = q_k ψ_i(ω_k)`` and its ``q_k²``.

    ``ψ_i(x) = f_{i-1}(x) / β_{i-1}`` with ``β_i = μ_1 ⋯ μ_i`` (0-based here:
    ``ψ[j] = f_j / β_j``). The normalization is exact for symmetric chains and
    approximate when the utilizations are close to one.
    """
    spectrum = char_poly_roots(r, boundary=boundary) if spectrum is None else np.sort(np.asarray(spectrum, dtype=float))
    k = int(np.argmin(np.abs(spectrum - omega_k)))
    scale = float(np.max(np.abs(spectrum)))
    gaps = np.abs(np.delete(spectrum, k) - spectrum[k])
    if gaps.size and float(np.min(gaps)) < DEGENERACY_RTOL * scale:
        raise ValueError(f"eigenvalue {omega_k:g} is (near) degenerate; q_k² is undefined")

    omega = float(spectrum[k])
    polys = birth_death_char_polys(r, omega, r.n, boundary=boundary)
    betas = np.concatenate(([1.0], np.cumprod(r.mus)))
    psi = polys[: r.n] / betas[: r.n]
    q_sq = abs(betas[r.n - 1] / (psi[r.n - 1] * float(np.prod(spectrum[k] - np.delete(spectrum, k)))))
    return psi, q_sq

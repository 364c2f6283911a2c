"""Eigenstructure of reversible generators and the sum-of-Lorentzians PSD."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
import scipy.integrate
import scipy.linalg
from numpy.typing import ArrayLike

from ..chain.birth_death import BirthDeathRates
from ..chain.generator import (
    DENSE_LIMIT,
    Generator,
    NotReversibleError,
    ReducibleChainError,
    StationaryDistribution,
    check_detailed_balance,
    group_inverse,
    matrix_autocorrelation,
    stationary_distribution,
)
from ..core import logger

NormalizationMode = Literal["raw", "energy"]

ZERO_RTOL = 1e-9
DEGENERACY_RTOL = 1e-8
ENERGY_FACTOR = 2.0 / np.pi


@dataclass(frozen=True, eq=False)
class EigenStructure:
    """Nonzero eigenvalues ω_k (ascending) with optional couplings and eigenvectors.

    ``basis`` holds the orthonormal eigenvectors u_k of the symmetrized
    generator as columns; right and left eigenvectors of G are
    ``v_k = u_k / √π`` and ``w_k = √π u_k``, so ``w_k · v_k = 1``.
    """

    omegas: np.ndarray
    gammas_sq: np.ndarray | None = None
    basis: np.ndarray | None = None
    sqrt_pi: np.ndarray | None = None
    symmetric: bool = False

    def __post_init__(self) -> None:
        omegas = np.asarray(self.omegas, dtype=float)
        if omegas.ndim != 1:
            raise ValueError("omegas must be one-dimensional")
        if np.any(omegas <= 0.0):
            raise ValueError("nonzero eigenvalues must be positive")
        if self.gammas_sq is not None:
            gammas_sq = np.asarray(self.gammas_sq, dtype=float)
            if gammas_sq.shape != omegas.shape:
                raise ValueError(f"{gammas_sq.size} couplings for {omegas.size} eigenvalues")
            if np.any(gammas_sq < 0.0):
                raise ValueError("couplings must be non-negative")
            object.__setattr__(self, "gammas_sq", gammas_sq)
        object.__setattr__(self, "omegas", omegas)

    @property
    def has_eigvecs(self) -> bool:
        return self.basis is not None and self.sqrt_pi is not None

    @property
    def right(self) -> np.ndarray:
        self._require_eigvecs()
        return self.basis / self.sqrt_pi[:, None]

    @property
    def left(self) -> np.ndarray:
        self._require_eigvecs()
        return self.basis * self.sqrt_pi[:, None]

    def projector(self, k: int) -> np.ndarray:
        """Rank-one spectral projector ``Π_k = v_k w_kᵀ``."""
        return np.outer(self.right[:, k], self.left[:, k])

    def with_couplings(self, gammas_sq: ArrayLike) -> EigenStructure:
        return replace(self, gammas_sq=np.asarray(gammas_sq, dtype=float))

    def _require_eigvecs(self) -> None:
        if not self.has_eigvecs:
            raise ValueError("eigenvectors were not retained for this eigenstructure")

    def _require_couplings(self) -> np.ndarray:
        if self.gammas_sq is None:
            raise ValueError("couplings not computed; call coupling_coefficients first")
        return self.gammas_sq


@dataclass(frozen=True, eq=False)
class LorentzianSpectrum:
    """Distinct relaxation rates with their aggregated couplings."""

    omegas: np.ndarray
    gammas_sq: np.ndarray
    normalization_mode: NormalizationMode = "raw"

    def __post_init__(self) -> None:
        omegas = np.asarray(self.omegas, dtype=float).ravel()
        gammas_sq = np.asarray(self.gammas_sq, dtype=float).ravel()
        if omegas.shape != gammas_sq.shape:
            raise ValueError(f"{gammas_sq.size} couplings for {omegas.size} rates")
        if np.any(omegas <= 0.0) or np.any(gammas_sq < 0.0):
            raise ValueError("rates must be positive and couplings non-negative")
        if self.normalization_mode not in ("raw", "energy"):
            raise ValueError(f"unknown normalization mode {self.normalization_mode!r}")
        order = np.argsort(omegas, kind="stable")
        object.__setattr__(self, "omegas", omegas[order])
        object.__setattr__(self, "gammas_sq", gammas_sq[order])

    @property
    def factor(self) -> float:
        return ENERGY_FACTOR if self.normalization_mode == "energy" else 1.0

    @property
    def variance(self) -> float:
        return float(np.sum(self.gammas_sq))

    @property
    def diffusion(self) -> float:
        """Green-Kubo coefficient ``Σ γ_k² / ω_k`` (raw units)."""
        return float(np.sum(self.gammas_sq / self.omegas))

    @property
    def energy(self) -> float:
        """``∫_0^∞ S_X(ω) dω`` in closed form."""
        return self.factor * 0.5 * np.pi * self.variance

    def as_mode(self, mode: NormalizationMode) -> LorentzianSpectrum:
        return replace(self, normalization_mode=mode)

    def __call__(self, omega: ArrayLike) -> np.ndarray | float:
        return analytic_psd(self, omega)

    def __len__(self) -> int:
        return self.omegas.size


def _zero_mode_index(eigvals: np.ndarray) -> int:
    scale = float(np.max(np.abs(eigvals)))
    near_zero = np.flatnonzero(np.abs(eigvals) < ZERO_RTOL * scale)
    if near_zero.size == 0:
        raise ReducibleChainError("no zero eigenvalue found; input is not a generator")
    if near_zero.size > 1:
        raise ReducibleChainError(f"{near_zero.size} near-zero eigenvalues: chain is reducible")
    return int(near_zero[0])


def _symmetrized(g: Generator) -> np.ndarray:
    # similar to D^{1/2} G D^{-1/2} for a reversible chain, without forming π
    off = -np.sqrt(np.abs(g.entries * g.entries.T))
    np.fill_diagonal(off, np.diag(g.entries))
    return off


def degenerate_groups(omegas: np.ndarray, rtol: float = DEGENERACY_RTOL) -> np.ndarray:
    """Group labels for sorted eigenvalues closer than ``rtol · max ω``."""
    if omegas.size == 0:
        return np.zeros(0, dtype=int)
    tol = rtol * float(np.max(np.abs(omegas)))
    return np.concatenate(([0], np.cumsum(np.diff(omegas) > tol)))


def eigendecompose(g: Generator, pi: StationaryDistribution) -> EigenStructure:
    if g.n > DENSE_LIMIT:
        raise ValueError(f"dense eigendecomposition limited to n <= {DENSE_LIMIT} (got {g.n}); use eigendecompose_tridiagonal")
    if not check_detailed_balance(g, pi):
        raise NotReversibleError("generator does not satisfy detailed balance")
    eigvals, basis = scipy.linalg.eigh(_symmetrized(g))
    zero = _zero_mode_index(eigvals)
    keep = np.delete(np.arange(g.n), zero)
    omegas = eigvals[keep]
    if np.any(omegas <= 0.0):
        raise ReducibleChainError("non-positive eigenvalue besides the zero mode")
    labels = degenerate_groups(omegas)
    if labels[-1] + 1 < omegas.size:
        logger.debug("%d distinct eigenvalues among %d nonzero modes", labels[-1] + 1, omegas.size)
    return EigenStructure(
        omegas=omegas,
        basis=basis[:, keep],
        sqrt_pi=np.sqrt(pi.pi),
        symmetric=g.is_symmetric(),
    )


def _split_over_groups(omegas: np.ndarray, raw: np.ndarray) -> np.ndarray:
    labels = degenerate_groups(omegas)
    totals = np.bincount(labels, weights=raw)
    sizes = np.bincount(labels)
    return (totals / sizes)[labels]


def coupling_coefficients(es: EigenStructure, x: ArrayLike, pi: StationaryDistribution) -> np.ndarray:
    """γ_k² = ⟨x, Π_k x⟩_π, one per ω_k.

    Eigenspace totals are basis independent; within a degenerate eigenspace
    the total is split equally among its members.
    """
    x = np.asarray(x, dtype=float)
    es._require_eigvecs()
    if x.shape != (pi.n,):
        raise ValueError(f"observable of shape {x.shape} does not match {pi.n} states")
    projections = es.basis.T @ (np.sqrt(pi.pi) * x)
    return _split_over_groups(es.omegas, projections**2)


def _grouped(omegas: np.ndarray, gammas_sq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    labels = degenerate_groups(omegas)
    sizes = np.bincount(labels)
    return np.bincount(labels, weights=omegas) / sizes, np.bincount(labels, weights=gammas_sq)


def lorentzian_spectrum(
    es: EigenStructure,
    x: ArrayLike | None = None,
    pi: StationaryDistribution | None = None,
    *,
    normalization: NormalizationMode = "raw",
) -> LorentzianSpectrum:
    gammas_sq = es.gammas_sq
    if gammas_sq is None:
        if x is None or pi is None:
            raise ValueError("an observable and π are needed when couplings are not attached")
        gammas_sq = coupling_coefficients(es, x, pi)
    omegas, totals = _grouped(es.omegas, gammas_sq)
    return LorentzianSpectrum(omegas, totals, normalization)


def analytic_psd(spec: LorentzianSpectrum, omega: ArrayLike) -> np.ndarray | float:
    """``S_X(ω) = Σ_k γ_k² ω_k / (ω_k² + ω²)``, vectorized over ω."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0.0):
        raise ValueError("frequencies must be non-negative")
    flat = omega.reshape(-1)
    out = np.empty(flat.size)
    # chunked so large spectra on dense grids stay within memory
    step = max(1, 2**22 // max(len(spec), 1))
    for start in range(0, flat.size, step):
        w = flat[start : start + step, None]
        out[start : start + step] = (spec.gammas_sq * spec.omegas / (spec.omegas**2 + w**2)).sum(axis=1)
    out = spec.factor * out.reshape(omega.shape)
    return float(out) if out.ndim == 0 else out


def _terms(source: EigenStructure | LorentzianSpectrum) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(source, LorentzianSpectrum):
        return source.omegas, source.gammas_sq
    return source.omegas, source._require_couplings()


def autocorrelation(source: EigenStructure | LorentzianSpectrum, tau: ArrayLike) -> np.ndarray | float:
    omegas, gammas_sq = _terms(source)
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0.0):
        raise ValueError("lags must be non-negative")
    out = (gammas_sq * np.exp(-np.multiply.outer(tau, omegas))).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def diffusion_coefficient(source: EigenStructure | LorentzianSpectrum) -> float:
    omegas, gammas_sq = _terms(source)
    return float(np.sum(gammas_sq / omegas))


def generalized_fundamental_matrix(
    g: Generator,
    pi: StationaryDistribution,
    omega: float,
    es: EigenStructure | None = None,
) -> np.ndarray:
    """``Z(ω) = Σ_k ω_k / (ω_k² + ω²) Π_k``; ``Z(0)`` is the group inverse of G."""
    if omega < 0.0:
        raise ValueError(f"omega must be non-negative (got {omega})")
    es = eigendecompose(g, pi) if es is None else es
    weights = es.omegas / (es.omegas**2 + omega**2)
    return (es.right * weights) @ es.left.T


def fundamental_matrix_composition(g: Generator, pi: StationaryDistribution, omega: float) -> np.ndarray:
    """``(G + ω² G^#)^#`` built from dense group inverses only."""
    if not check_detailed_balance(g, pi):
        raise NotReversibleError("generator does not satisfy detailed balance")
    g_sharp = group_inverse(g, pi)
    return group_inverse(g.entries + omega**2 * g_sharp, pi)


def graph_fourier_transform(x: ArrayLike, es: EigenStructure) -> np.ndarray:
    """``x̂(ω_k) = ⟨x, u_k⟩`` against the orthonormal Laplacian eigenvectors."""
    es._require_eigvecs()
    if not es.symmetric:
        raise NotReversibleError("graph Fourier transform needs a symmetric generator (graph Laplacian)")
    x = np.asarray(x, dtype=float)
    if x.shape != (es.basis.shape[0],):
        raise ValueError(f"signal of shape {x.shape} does not match {es.basis.shape[0]} vertices")
    return es.basis.T @ x


def graph_psd(x: ArrayLike, es: EigenStructure, *, normalization: NormalizationMode = "raw") -> LorentzianSpectrum:
    """Graph PSD ``(1/n) Σ_k x̂(ω_k)² ω_k / (ω_k² + ω²)``."""
    x_hat = graph_fourier_transform(x, es)
    omegas, totals = _grouped(es.omegas, x_hat**2 / es.basis.shape[0])
    return LorentzianSpectrum(omegas, totals, normalization)


def eigendecompose_tridiagonal(
    chain: BirthDeathRates | Generator,
    x: ArrayLike,
    *,
    block: int = 256,
) -> EigenStructure:
    """Eigenvalues and couplings of a birth-death chain without a dense matrix.

    Eigenvectors of the symmetrized tridiagonal matrix are computed in index
    blocks and reduced to couplings immediately, so memory stays O(n · block).
    """
    if isinstance(chain, Generator):
        if chain.structure_tag != "tridiagonal":
            raise ValueError(f"expected a tridiagonal generator, got {chain.structure_tag!r}")
        chain = BirthDeathRates(-np.diag(chain.entries, 1), -np.diag(chain.entries, -1))
    x = np.asarray(x, dtype=float)
    if x.shape != (chain.n,):
        raise ValueError(f"observable of shape {x.shape} does not match {chain.n} states")

    diag = chain.diagonal("reflecting")
    off = -np.sqrt(chain.off_diagonal_products())
    weighted = np.sqrt(chain.stationary().pi) * x

    eigvals = scipy.linalg.eigh_tridiagonal(diag, off, eigvals_only=True)
    zero = _zero_mode_index(eigvals)
    raw = np.empty(chain.n)
    for start in range(0, chain.n, block):
        stop = min(start + block, chain.n) - 1
        _, vecs = scipy.linalg.eigh_tridiagonal(diag, off, select="i", select_range=(start, stop))
        raw[start : stop + 1] = (vecs.T @ weighted) ** 2
    logger.debug("Tridiagonal eigensolve of %d states in %d blocks", chain.n, -(-chain.n // block))

    omegas = np.delete(eigvals, zero)
    if np.any(omegas <= 0.0):
        raise ReducibleChainError("non-positive eigenvalue besides the zero mode")
    gammas_sq = _split_over_groups(omegas, np.delete(raw, zero))
    return EigenStructure(omegas=omegas, gammas_sq=gammas_sq)


def generator_spectrum(
    g: Generator,
    x: ArrayLike,
    pi: StationaryDistribution | None = None,
    *,
    normalization: NormalizationMode = "raw",
) -> LorentzianSpectrum:
    """Lorentzian spectrum of an observable, dispatching on the structure tag."""
    if g.structure_tag == "tridiagonal" and g.n > DENSE_LIMIT:
        return lorentzian_spectrum(eigendecompose_tridiagonal(g, x), normalization=normalization)
    pi = stationary_distribution(g) if pi is None else pi
    return lorentzian_spectrum(eigendecompose(g, pi), x, pi, normalization=normalization)


def cosine_transform_psd(
    g: Generator,
    pi: StationaryDistribution,
    x: ArrayLike,
    omega: float,
    *,
    horizon: float | None = None,
    epsrel: float = 1e-10,
) -> float:
    """Brute-force ``∫_0^T C_X(τ) cos(ωτ) dτ`` with C_X from the matrix exponential."""
    if omega < 0.0:
        raise ValueError(f"omega must be non-negative (got {omega})")
    x = np.asarray(x, dtype=float)
    if horizon is None:
        rates = np.sort(np.abs(np.linalg.eigvals(g.entries).real))
        slowest = rates[1] if rates.size > 1 else rates[0]
        # e^{-23} < 1e-10
        horizon = 23.0 / slowest

    def corr(tau: float) -> float:
        return matrix_autocorrelation(g, pi, x, tau)

    if omega == 0.0:
        value, _ = scipy.integrate.quad(corr, 0.0, horizon, epsabs=0.0, epsrel=epsrel, limit=500)
    else:
        value, _ = scipy.integrate.quad(corr, 0.0, horizon, weight="cos", wvar=omega, epsabs=0.0, epsrel=epsrel, limit=500)
    return float(value)


def sampled_psd(spec: LorentzianSpectrum, freqs: ArrayLike, sample_dt: float) -> np.ndarray:
    """Expected one-sided periodogram of the process sampled every ``sample_dt``.

    Each Lorentzian maps to the AR(1) sequence with ``a = exp(-ω_k dt)``; the
    result includes aliasing of the continuous spectrum onto the grid.
    """
    if sample_dt <= 0.0:
        raise ValueError(f"sample_dt must be positive (got {sample_dt})")
    freqs = np.asarray(freqs, dtype=float)
    a = np.exp(-spec.omegas * sample_dt)
    flat = freqs.reshape(-1)
    out = np.empty(flat.size)
    step = max(1, 2**22 // max(len(spec), 1))
    for start in range(0, flat.size, step):
        cos_term = np.cos(2.0 * np.pi * sample_dt * flat[start : start + step, None])
        terms = spec.gammas_sq * (1.0 - a**2) / (1.0 - 2.0 * a * cos_term + a**2)
        out[start : start + step] = terms.sum(axis=1)
    return 2.0 * sample_dt * out.reshape(freqs.shape)


def one_sided_psd(spec: LorentzianSpectrum, freqs: ArrayLike) -> np.ndarray | float:
    """One-sided density in cycles per unit time, ``4 S_X(2πf)`` in raw units."""
    return 4.0 * analytic_psd(spec.as_mode("raw"), 2.0 * np.pi * np.asarray(freqs, dtype=float))

"""Finite-state generators, stationary laws and the π-weighted geometry.

Sign convention: off-diagonal rates are non-positive, the diagonal holds the
exit rates and every row sums to zero, so that ``P(τ) = expm(-G τ)`` and the
stationary law is the left null vector of ``G``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike
from scipy.sparse.csgraph import connected_components

from ..core import logger

STRUCTURE_TAGS = ("dense", "tridiagonal", "circulant", "arrowhead")
DENSE_LIMIT = 2048

ROW_SUM_RTOL = 1e-12
STATIONARY_RTOL = 1e-10
BALANCE_RTOL = 1e-10
# |Σπ - 1|; a pairwise float sum of a renormalized vector stays far below it
PI_SUM_TOL = 1e-12


class ReducibleChainError(ValueError):
    """The chain has more than one closed class (null space not one-dimensional)."""


class NotReversibleError(ValueError):
    """Detailed balance does not hold where a reversible chain is required."""


def _readonly(values: ArrayLike, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Generator:
    """Infinitesimal generator with a structure tag used for solver dispatch."""

    entries: np.ndarray
    structure_tag: str = "dense"

    def __post_init__(self) -> None:
        entries = _readonly(self.entries, 2)
        if entries.shape[0] != entries.shape[1]:
            raise ValueError(f"generator must be square, got shape {entries.shape}")
        if entries.shape[0] < 2:
            raise ValueError("generator needs at least 2 states")
        if self.structure_tag not in STRUCTURE_TAGS:
            raise ValueError(f"unknown structure tag {self.structure_tag!r}; expected one of {STRUCTURE_TAGS}")
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.entries)))

    @property
    def exit_rates(self) -> np.ndarray:
        return np.diag(self.entries).copy()

    def rates(self) -> np.ndarray:
        """Non-negative jump rates ``q_ij = -G_ij`` with a zero diagonal."""
        q = -self.entries.copy()
        np.fill_diagonal(q, 0.0)
        return q

    def is_symmetric(self, rtol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.T)) <= rtol * self.scale)


@dataclass(frozen=True, eq=False)
class StationaryDistribution:
    pi: np.ndarray

    def __post_init__(self) -> None:
        pi = _readonly(self.pi, 1)
        if np.any(pi <= 0.0):
            raise ValueError("stationary probabilities must be positive")
        if abs(pi.sum() - 1.0) > PI_SUM_TOL:
            raise ValueError(f"stationary probabilities must sum to 1 (got {pi.sum()!r})")
        object.__setattr__(self, "pi", pi)

    @property
    def n(self) -> int:
        return self.pi.size

    def projector(self) -> np.ndarray:
        """Limiting transition matrix ``P(∞) = 1 π``."""
        return np.outer(np.ones(self.n), self.pi)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def _as_matrix(g: Generator | ArrayLike) -> np.ndarray:
    return g.entries if isinstance(g, Generator) else np.asarray(g, dtype=float)


def is_irreducible(g: Generator | ArrayLike) -> bool:
    entries = _as_matrix(g)
    pattern = (entries != 0.0).astype(np.int8)
    np.fill_diagonal(pattern, 0)
    n_components, _ = connected_components(pattern, directed=True, connection="strong")
    return n_components == 1


def validate_generator(g: Generator | ArrayLike) -> ValidationReport:
    entries = _as_matrix(g)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ValueError(f"generator must be a square matrix, got shape {entries.shape}")
    violations: list[str] = []
    scale = float(np.max(np.abs(entries))) if entries.size else 0.0
    if not np.all(np.isfinite(entries)):
        violations.append("non-finite entries")
        return ValidationReport(tuple(violations))

    row_sums = entries.sum(axis=1)
    bad_rows = np.flatnonzero(np.abs(row_sums) > ROW_SUM_RTOL * max(scale, 1e-300))
    if bad_rows.size:
        violations.append(f"row sums not zero at rows {bad_rows[:10].tolist()} (max |sum| {np.max(np.abs(row_sums)):.3g})")

    off = entries - np.diag(np.diag(entries))
    if np.any(off > 0.0):
        violations.append("positive off-diagonal entries")
    if np.any(np.diag(entries) < 0.0):
        violations.append("negative diagonal entries")
    if not is_irreducible(entries):
        violations.append("not irreducible (transition graph not strongly connected)")
    return ValidationReport(tuple(violations))


def product_form_stationary(births: np.ndarray, deaths: np.ndarray) -> np.ndarray:
    """Birth-death stationary law from births λ_0..λ_{n-2} and deaths μ_1..μ_{n-1}."""
    births = np.asarray(births, dtype=float)
    deaths = np.asarray(deaths, dtype=float)
    if births.shape != deaths.shape:
        raise ValueError(f"{births.size} birth rates for {deaths.size} death rates")
    if np.any(births <= 0.0) or np.any(deaths <= 0.0):
        raise ReducibleChainError("birth-death chain has a zero rate; null space is not one-dimensional")
    # product form in log space: pi_{k+1} = pi_k * lambda_k / mu_{k+1}
    log_pi = np.concatenate(([0.0], np.cumsum(np.log(births) - np.log(deaths))))
    log_pi -= log_pi.max()
    pi = np.exp(log_pi)
    return pi / pi.sum()


def _deflated_stationary(entries: np.ndarray) -> np.ndarray:
    n = entries.shape[0]
    system = entries.T.copy()
    system[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise ReducibleChainError("deflated balance system is singular") from exc
    return pi


def stationary_distribution(g: Generator) -> StationaryDistribution:
    entries = g.entries
    if not is_irreducible(entries):
        raise ReducibleChainError("chain is reducible: stationary law is not unique")
    if g.structure_tag == "tridiagonal":
        pi = product_form_stationary(-np.diag(entries, 1), -np.diag(entries, -1))
    else:
        pi = _deflated_stationary(entries)
    residual = float(np.max(np.abs(pi @ entries)))
    if residual > STATIONARY_RTOL * g.scale or np.any(pi <= 0.0):
        raise ReducibleChainError(f"stationary solve failed (residual {residual:.3g})")
    pi = pi / pi.sum()
    logger.debug("Stationary law for n=%d (%s), residual %.2e", g.n, g.structure_tag, residual)
    return StationaryDistribution(pi)


def check_detailed_balance(g: Generator, pi: StationaryDistribution) -> bool:
    if pi.n != g.n:
        raise ValueError(f"π has {pi.n} entries for a {g.n}-state generator")
    flux = pi.pi[:, None] * g.entries
    return bool(np.max(np.abs(flux - flux.T)) <= BALANCE_RTOL * g.scale)


def pi_inner_product(u: ArrayLike, v: ArrayLike, pi: StationaryDistribution) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (pi.n,) or v.shape != (pi.n,):
        raise ValueError(f"vectors of shapes {u.shape} and {v.shape} do not match {pi.n} states")
    return float(np.sum(pi.pi * u * v))


def _check_dense(g: Generator) -> None:
    if g.n > DENSE_LIMIT:
        raise ValueError(f"dense path limited to n <= {DENSE_LIMIT} states (got {g.n})")


def transition_matrix(g: Generator, tau: float) -> np.ndarray:
    """``P(τ) = expm(-G τ)`` by scaling and squaring; oracle use only."""
    if tau < 0.0:
        raise ValueError(f"tau must be non-negative (got {tau})")
    _check_dense(g)
    return scipy.linalg.expm(-tau * g.entries)


def group_inverse(g: Generator | np.ndarray, pi: StationaryDistribution) -> np.ndarray:
    """Group inverse ``A^# = (A + 1π)^{-1} - 1π``.

    Valid for any index-1 matrix whose right kernel is spanned by the ones vector
    and whose left kernel is spanned by π, generators included.
    """
    entries = _as_matrix(g)
    if entries.shape != (pi.n, pi.n):
        raise ValueError(f"matrix of shape {entries.shape} does not match {pi.n} states")
    if pi.n > DENSE_LIMIT:
        raise ValueError(f"dense path limited to n <= {DENSE_LIMIT} states (got {pi.n})")
    limit = pi.projector()
    return np.linalg.inv(entries + limit) - limit


def matrix_autocorrelation(g: Generator, pi: StationaryDistribution, x: ArrayLike, tau: float) -> float:
    x = np.asarray(x, dtype=float)
    centred = transition_matrix(g, tau) - pi.projector()
    return pi_inner_product(x, centred @ x, pi)


def resolvent_psd(g: Generator, pi: StationaryDistribution, x: ArrayLike, omega: float) -> float:
    """``⟨x, Re[(G + iω)^{-1}] x⟩_π``; the group-inverse form at ``ω = 0``."""
    x = np.asarray(x, dtype=float)
    if omega < 0.0:
        raise ValueError(f"omega must be non-negative (got {omega})")
    _check_dense(g)
    if omega == 0.0:
        return pi_inner_product(x, group_inverse(g, pi) @ x, pi)
    shifted = g.entries.astype(complex) + 1j * omega * np.eye(g.n)
    z = np.linalg.solve(shifted, x.astype(complex))
    return pi_inner_product(x, z.real, pi)

"""Model zoo: M/M/1 truncations, Toeplitz closed forms, ring, star and telegraph chains."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.fft
import scipy.linalg
from numpy.typing import ArrayLike
from scipy.special import logsumexp

from ..analysis import spectral
from ..core import logger
from .birth_death import BirthDeathRates
from .generator import Generator

MODEL_KINDS = ("mm1", "mm1-open", "ring", "star", "birth-death", "toeplitz", "telegraph")
OBSERVABLES = ("index", "centred")
QUEUE_KINDS = ("mm1", "mm1-open", "toeplitz")
# (λ, μ) when neither is given; ring and star are only reversible at λ = μ
DEFAULT_RATES = {kind: (1.0, 2.0) if kind in QUEUE_KINDS else (1.0, 1.0) for kind in MODEL_KINDS}


@dataclass(frozen=True)
class ToeplitzParams:
    """Constants of ``T_n(a, b, c)``: a below, b on and c above the diagonal."""

    a: float
    b: float
    c: float
    n: int

    def __post_init__(self) -> None:
        if not (self.a < 0.0 and self.c < 0.0):
            raise ValueError(f"off-diagonal constants must be negative (a={self.a}, c={self.c})")
        if self.b <= 0.0:
            raise ValueError(f"diagonal constant must be positive (b={self.b})")
        if self.n < 1:
            raise ValueError(f"n must be >= 1 (got {self.n})")

    @classmethod
    def for_queue(cls, lam: float, mu: float, n: int) -> ToeplitzParams:
        return cls(a=-mu, b=lam + mu, c=-lam, n=n)

    def matrix(self) -> np.ndarray:
        return scipy.linalg.toeplitz(
            np.r_[self.b, self.a, np.zeros(max(self.n - 2, 0))][: self.n],
            np.r_[self.b, self.c, np.zeros(max(self.n - 2, 0))][: self.n],
        )


@dataclass(frozen=True)
class ToeplitzModes:
    right: np.ndarray
    left: np.ndarray
    normalizer: float


@dataclass(frozen=True)
class HeavyTrafficConfig:
    """M/M/1 with ``λ = 1`` and ``μ = 1 + ε``, truncated at n states."""

    epsilon: float
    n: int = 1000

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1) (got {self.epsilon})")
        if self.n < 100:
            raise ValueError(f"heavy-traffic truncation needs n >= 100 (got {self.n})")
        if self.epsilon * self.n < 0.01:
            logger.warning(
                "Truncation n=%d sits far below the bulk of π (mean 1/ε = %.3g)",
                self.n,
                1.0 / self.epsilon,
            )

    @property
    def lam(self) -> float:
        return 1.0

    @property
    def mu(self) -> float:
        return 1.0 + self.epsilon

    @property
    def rho(self) -> float:
        return self.lam / self.mu

    def toeplitz(self) -> ToeplitzParams:
        return ToeplitzParams.for_queue(self.lam, self.mu, self.n)


@dataclass(frozen=True)
class QueueMoments:
    mean: float
    variance: float


def _check_rates(lam: float, mu: float) -> None:
    if lam <= 0.0 or mu <= 0.0:
        raise ValueError(f"rates must be positive (lambda={lam}, mu={mu})")


def mm1_generator(lam: float, mu: float, n: int) -> Generator:
    """Truncated M/M/1 queue closed by a reflecting last row."""
    _check_rates(lam, mu)
    return BirthDeathRates.constant(lam, mu, n).generator()


def birth_death_generator(rates: BirthDeathRates) -> Generator:
    return rates.generator()


def toeplitz_eigenvalues(p: ToeplitzParams) -> np.ndarray:
    k = np.arange(1, p.n + 1)
    return p.b - 2.0 * np.sqrt(p.a * p.c) * np.cos(k * np.pi / (p.n + 1))


def toeplitz_eigenvectors(p: ToeplitzParams, k: int) -> ToeplitzModes:
    """Unnormalized right/left eigenvectors of mode k; ``normalizer · w·v = 1``."""
    if not 1 <= k <= p.n:
        raise ValueError(f"mode index must be in [1, {p.n}] (got {k})")
    i = np.arange(1, p.n + 1)
    sines = np.sin(k * i * np.pi / (p.n + 1))
    right = (p.a / p.c) ** (i / 2.0) * sines
    left = (p.c / p.a) ** (i / 2.0) * sines
    return ToeplitzModes(right=right, left=left, normalizer=1.0 / float(left @ right))


def mm1_gamma_scaling(cfg: HeavyTrafficConfig, k: int) -> float:
    """Heavy-traffic approximation ``|γ_k| ≈ √ε n² / (π k)``."""
    if not 1 <= k <= cfg.n // 10:
        raise ValueError(f"approximation holds for 1 <= k <= n/10 = {cfg.n // 10} (got {k})")
    return float(np.sqrt(cfg.epsilon) * cfg.n**2 / (np.pi * k))


def light_traffic_eigenvalues(eps: float, n: int) -> np.ndarray:
    """Toeplitz eigenvalues with ``λ = ε``, ``μ = 1``; they collapse onto 1 as ε → 0."""
    return toeplitz_eigenvalues(ToeplitzParams.for_queue(eps, 1.0, n))


def open_mm1_spectrum(
    lam: float,
    mu: float,
    n: int,
    x: ArrayLike | None = None,
    *,
    normalize_projector: bool = True,
) -> spectral.LorentzianSpectrum:
    """Closed-form spectrum of the queue approximated by ``T_n(-μ, λ+μ, -λ)``.

    States are i = 1..n with ``π_i ∝ ρ^i``. The couplings come from the
    Toeplitz eigenvectors via a type-I sine transform. With
    ``normalize_projector=False`` they use ``π_i = (1-ρ)ρ^i`` and the
    unnormalized sine basis, the form behind the ``√ε n²/(πk)`` estimate.
    """
    _check_rates(lam, mu)
    p = ToeplitzParams.for_queue(lam, mu, n)
    i = np.arange(1, n + 1)
    x = i.astype(float) if x is None else np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"observable of shape {x.shape} does not match {n} states")
    log_rho = np.log(lam / mu)
    if normalize_projector:
        log_z = logsumexp(i * log_rho)
        weights = np.exp(0.5 * i * log_rho - 0.5 * log_z)
        sums = 0.5 * scipy.fft.dst(x * weights, type=1)
        gammas_sq = 2.0 / (n + 1) * sums**2
    else:
        if lam >= mu:
            raise ValueError("the unnormalized form needs rho < 1")
        sums = 0.5 * scipy.fft.dst(x * np.exp(0.5 * i * log_rho), type=1)
        gammas_sq = (1.0 - lam / mu) * sums**2
    return spectral.LorentzianSpectrum(toeplitz_eigenvalues(p), gammas_sq)


def mm1_moments(lam: float, mu: float) -> QueueMoments:
    """Mean and variance of the untruncated M/M/1 queue length."""
    _check_rates(lam, mu)
    rho = lam / mu
    if rho >= 1.0:
        raise ValueError(f"queue is unstable (rho = {rho:g})")
    return QueueMoments(mean=rho / (1.0 - rho), variance=rho / (1.0 - rho) ** 2)


def ring_generator(lam: float, mu: float, n: int) -> Generator:
    """Random walk on a ring: clockwise rate λ, counterclockwise rate μ."""
    _check_rates(lam, mu)
    if n < 3:
        raise ValueError(f"a ring needs n >= 3 states (got {n})")
    first_row = np.zeros(n)
    first_row[0] = lam + mu
    first_row[1] = -lam
    first_row[-1] = -mu
    return Generator(scipy.linalg.circulant(first_row).T, structure_tag="circulant")


def ring_eigenvalues(lam: float, mu: float, n: int) -> np.ndarray:
    """``λ + μ - λ w^k - μ w^{-k}`` for k = 0..n-1, ``w = e^{2πi/n}``."""
    roots = np.exp(2j * np.pi * np.arange(n) / n)
    return lam + mu - lam * roots - mu * np.conj(roots)


def ring_gamma_closed_form(n: int, k: int) -> float:
    """Coupling ``γ_k = 1 / (2 sin(πk/n))`` of ``x_q = q`` on the symmetric ring."""
    if not 1 <= k <= n - 1:
        raise ValueError(f"mode index must be in [1, {n - 1}] (got {k})")
    return float(1.0 / (2.0 * np.sin(np.pi * k / n)))


def star_generator(lam: float, mu: float, n: int) -> Generator:
    """Arrowhead generator on n + 1 states, state 0 being the centre."""
    _check_rates(lam, mu)
    if n < 1:
        raise ValueError(f"a star needs at least one peripheral state (got {n})")
    entries = np.zeros((n + 1, n + 1))
    entries[0, 0] = n * lam
    entries[0, 1:] = -lam
    entries[1:, 0] = -mu
    entries[np.arange(1, n + 1), np.arange(1, n + 1)] = mu
    return Generator(entries, structure_tag="arrowhead")


def telegraph_generator(lam: float, mu: float) -> Generator:
    return star_generator(lam, mu, 1)


def _float_list(value: Any) -> tuple[float, ...] | None:
    if value is None:
        return None
    if isinstance(value, str):
        return tuple(float(v) for v in value.split(",") if v.strip())
    return tuple(float(v) for v in value)


@dataclass(frozen=True)
class ModelSpec:
    """Model description consumed by the commands."""

    kind: str = "mm1"
    n: int = 1000
    eps: float | None = None
    lam: float | None = None
    mu: float | None = None
    lambdas: tuple[float, ...] | None = None
    mus: tuple[float, ...] | None = None
    observable: str = "index"

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model {self.kind!r}; expected one of {MODEL_KINDS}")
        if self.observable not in OBSERVABLES:
            raise ValueError(f"unknown observable {self.observable!r}; expected one of {OBSERVABLES}")
        if self.eps is not None and self.kind in QUEUE_KINDS:
            if not 0.0 < self.eps < 1.0:
                raise ValueError(f"eps must lie in (0, 1) (got {self.eps})")

    @classmethod
    def from_config(cls, config: Mapping[str, Any]) -> ModelSpec:
        return cls(
            kind=str(config.get("model", "mm1")),
            n=int(config.get("n", 1000)),
            eps=None if config.get("eps") is None else float(config["eps"]),
            lam=None if config.get("lambda") is None else float(config["lambda"]),
            mu=None if config.get("mu") is None else float(config["mu"]),
            lambdas=_float_list(config.get("lambdas")),
            mus=_float_list(config.get("mus")),
            observable=str(config.get("observable", "index")),
        )

    @property
    def rates(self) -> tuple[float, float]:
        """(λ, μ): heavy-traffic parameterization when ε is set, else per-kind defaults for unset rates."""
        if self.eps is not None and self.kind in QUEUE_KINDS:
            return 1.0, 1.0 + self.eps
        lam, mu = DEFAULT_RATES[self.kind]
        return (lam if self.lam is None else self.lam), (mu if self.mu is None else self.mu)

    @property
    def is_closed_form(self) -> bool:
        return self.kind in ("mm1-open", "toeplitz")

    def birth_death_rates(self) -> BirthDeathRates:
        lam, mu = self.rates
        if self.kind == "birth-death":
            if self.lambdas is None or self.mus is None:
                raise ValueError("birth-death model needs 'lambdas' and 'mus'")
            return BirthDeathRates(np.array(self.lambdas), np.array(self.mus))
        if self.kind == "mm1":
            return BirthDeathRates.constant(lam, mu, self.n)
        raise ValueError(f"model {self.kind!r} is not a birth-death chain")

    def generator(self) -> Generator:
        lam, mu = self.rates
        match self.kind:
            case "mm1" | "birth-death":
                return self.birth_death_rates().generator()
            case "ring":
                return ring_generator(lam, mu, self.n)
            case "star":
                return star_generator(lam, mu, self.n)
            case "telegraph":
                return telegraph_generator(lam, mu)
            case _:
                raise ValueError(f"model {self.kind!r} is a closed-form spectrum without a generator")

    @property
    def n_states(self) -> int:
        match self.kind:
            case "star":
                return self.n + 1
            case "telegraph":
                return 2
            case "birth-death":
                return len(self.lambdas or ()) + 1
            case _:
                return self.n

    def observable_values(self, pi: np.ndarray | None = None) -> np.ndarray:
        """State values x; 1-based for the open queue, 0-based otherwise."""
        offset = 1 if self.is_closed_form else 0
        x = np.arange(self.n_states, dtype=float) + offset
        if self.observable == "centred":
            weights = np.full(x.size, 1.0 / x.size) if pi is None else np.asarray(pi)
            x = x - float(weights @ x)
        return x

    def closed_form_spectrum(self) -> spectral.LorentzianSpectrum:
        lam, mu = self.rates
        log_weights = np.arange(1, self.n + 1) * np.log(lam / mu)
        pi = np.exp(log_weights - logsumexp(log_weights))
        return open_mm1_spectrum(lam, mu, self.n, self.observable_values(pi))

    def to_config(self) -> dict[str, Any]:
        return {
            "model": self.kind,
            "n": self.n,
            "eps": self.eps,
            "lambda": self.lam,
            "mu": self.mu,
            "lambdas": list(self.lambdas) if self.lambdas is not None else None,
            "mus": list(self.mus) if self.mus is not None else None,
            "observable": self.observable,
        }

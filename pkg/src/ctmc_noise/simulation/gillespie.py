"""Gillespie sample paths for finite chains and the unbounded M/M/1 counter."""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from dataclasses import dataclass
from typing import Any, Protocol

import numpy as np
from numba import njit
from numpy.typing import ArrayLike

from ..chain.generator import Generator, StationaryDistribution
from ..core import logger

CHUNK_EVENTS = 2**18
STATIONARY = "stationary"
BURN_IN_FRACTION = 0.1


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings; ``sample_dt=None`` picks ``1 / (4 · max exit rate)``."""

    seed: int = 0
    t_end: float = 4096.0
    sample_dt: float | None = None
    n_realizations: int = 1
    initial_state: int | str = STATIONARY
    burn_in: float | None = None
    window: str = "none"
    workers: int = 1

    def __post_init__(self) -> None:
        if self.t_end <= 0.0:
            raise ValueError(f"t_end must be positive (got {self.t_end})")
        if self.sample_dt is not None and self.sample_dt <= 0.0:
            raise ValueError(f"sample_dt must be positive (got {self.sample_dt})")
        if self.n_realizations < 1:
            raise ValueError(f"need at least one realization (got {self.n_realizations})")
        if isinstance(self.initial_state, str) and self.initial_state != STATIONARY:
            raise ValueError(f"initial_state must be a state index or {STATIONARY!r}")
        if self.burn_in is not None and self.burn_in < 0.0:
            raise ValueError(f"burn_in must be non-negative (got {self.burn_in})")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1 (got {self.workers})")
        if self.window not in ("none", "hann"):
            raise ValueError(f"window must be 'none' or 'hann' (got {self.window!r})")

    @classmethod
    def from_config(cls, config: Mapping[str, Any]) -> SimConfig:
        initial = config.get("initial_state", STATIONARY)
        if isinstance(initial, str) and initial != STATIONARY:
            try:
                initial = int(initial)
            except ValueError as exc:
                raise ValueError(f"initial_state must be an integer or {STATIONARY!r} (got {initial!r})") from exc
        return cls(
            seed=int(config.get("seed", 0)),
            t_end=float(config.get("t_end", 4096.0)),
            sample_dt=None if config.get("dt") is None else float(config["dt"]),
            n_realizations=int(config.get("realizations", 1)),
            initial_state=initial,
            burn_in=None if config.get("burn_in") is None else float(config["burn_in"]),
            window=str(config.get("window", "none")),
            workers=int(config.get("workers", 1)),
        )

    def to_config(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "t_end": self.t_end,
            "dt": self.sample_dt,
            "realizations": self.n_realizations,
            "initial_state": self.initial_state,
            "burn_in": self.burn_in,
            "window": self.window,
            "workers": self.workers,
        }

    @property
    def effective_burn_in(self) -> float:
        if self.initial_state == STATIONARY:
            return 0.0 if self.burn_in is None else self.burn_in
        return BURN_IN_FRACTION * self.t_end if self.burn_in is None else self.burn_in


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Piecewise-constant path: ``states[i]`` holds on ``[jump_times[i], jump_times[i+1])``."""

    jump_times: np.ndarray
    states: np.ndarray
    t_end: float

    def __post_init__(self) -> None:
        if self.jump_times.shape != self.states.shape or self.jump_times.size == 0:
            raise ValueError("jump_times and states must be non-empty and aligned")
        if self.jump_times[0] != 0.0:
            raise ValueError("a trajectory starts at t = 0")

    @property
    def n_events(self) -> int:
        return self.jump_times.size - 1

    def holding_times(self) -> np.ndarray:
        return np.diff(np.append(self.jump_times, self.t_end))

    def to_columns(self) -> dict[str, np.ndarray]:
        return {"time": self.jump_times, "state": self.states}


class JumpModel(Protocol):
    @property
    def max_exit_rate(self) -> float: ...

    def initial_state(self, rng: np.random.Generator) -> int: ...

    def observe(self, states: np.ndarray) -> np.ndarray: ...

    def run_chunk(
        self, state: int, t: float, t_stop: float, holds: np.ndarray, picks: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, int, float, bool]: ...


@njit(cache=True)
def _chain_chunk(state, t, t_stop, exit_rates, indptr, targets, cumprob, holds, picks, times_out, states_out):
    n = 0
    for i in range(holds.size):
        t += holds[i] / exit_rates[state]
        if t >= t_stop:
            return n, state, t, True
        lo = indptr[state]
        hi = indptr[state + 1] - 1
        # first target whose cumulative probability exceeds the draw
        while lo < hi:
            mid = (lo + hi) // 2
            if cumprob[mid] > picks[i]:
                hi = mid
            else:
                lo = mid + 1
        state = targets[lo]
        times_out[n] = t
        states_out[n] = state
        n += 1
    return n, state, t, False


@njit(cache=True)
def _counter_chunk(state, t, t_stop, lam, mu, holds, picks, times_out, states_out):
    n = 0
    for i in range(holds.size):
        rate = lam + mu if state > 0 else lam
        t += holds[i] / rate
        if t >= t_stop:
            return n, state, t, True
        if state > 0 and picks[i] * rate >= lam:
            state -= 1
        else:
            state += 1
        times_out[n] = t
        states_out[n] = state
        n += 1
    return n, state, t, False


@dataclass(frozen=True, eq=False)
class FiniteChain:
    """Jump structure of a finite generator in compressed-row form."""

    exit_rates: np.ndarray
    indptr: np.ndarray
    targets: np.ndarray
    cumprob: np.ndarray
    values: np.ndarray
    pi: np.ndarray | None = None

    @classmethod
    def from_generator(
        cls,
        g: Generator,
        pi: StationaryDistribution | None = None,
        values: ArrayLike | None = None,
    ) -> FiniteChain:
        rates = g.rates()
        exit_rates = rates.sum(axis=1)
        if np.any(exit_rates <= 0.0):
            absorbing = np.flatnonzero(exit_rates <= 0.0)
            raise ValueError(f"absorbing states {absorbing[:10].tolist()} have zero exit rate")
        rows, cols = np.nonzero(rates)
        probs = rates[rows, cols] / exit_rates[rows]
        indptr = np.concatenate(([0], np.cumsum(np.bincount(rows, minlength=g.n)))).astype(np.int64)
        cumprob = np.empty_like(probs)
        for state in range(g.n):
            lo, hi = indptr[state], indptr[state + 1]
            cumprob[lo:hi] = np.cumsum(probs[lo:hi])
            cumprob[hi - 1] = 1.0
        values = np.arange(g.n, dtype=float) if values is None else np.asarray(values, dtype=float)
        if values.shape != (g.n,):
            raise ValueError(f"values of shape {values.shape} do not match {g.n} states")
        return cls(
            exit_rates=exit_rates,
            indptr=indptr,
            targets=cols.astype(np.int64),
            cumprob=cumprob,
            values=values,
            pi=None if pi is None else np.asarray(pi.pi),
        )

    @property
    def n(self) -> int:
        return self.exit_rates.size

    @property
    def max_exit_rate(self) -> float:
        return float(self.exit_rates.max())

    def initial_state(self, rng: np.random.Generator) -> int:
        if self.pi is None:
            raise ValueError("stationary initial state requested but π is unknown")
        return int(rng.choice(self.n, p=self.pi))

    def observe(self, states: np.ndarray) -> np.ndarray:
        return self.values[states]

    def run_chunk(self, state, t, t_stop, holds, picks):
        times = np.empty(holds.size)
        states = np.empty(holds.size, dtype=np.int64)
        n, state, t, done = _chain_chunk(
            state, t, t_stop, self.exit_rates, self.indptr, self.targets, self.cumprob, holds, picks, times, states
        )
        return times[:n], states[:n], int(state), float(t), bool(done)


@dataclass(frozen=True)
class BirthDeathCounter:
    """Unbounded M/M/1 queue length: births at λ, deaths at μ except in state 0."""

    lam: float
    mu: float

    def __post_init__(self) -> None:
        if self.lam <= 0.0 or self.mu <= 0.0:
            raise ValueError(f"rates must be positive (lambda={self.lam}, mu={self.mu})")

    @property
    def rho(self) -> float:
        return self.lam / self.mu

    @property
    def max_exit_rate(self) -> float:
        return self.lam + self.mu

    def initial_state(self, rng: np.random.Generator) -> int:
        if self.rho >= 1.0:
            raise ValueError(f"no stationary law for rho = {self.rho:g}")
        return int(rng.geometric(1.0 - self.rho)) - 1

    def observe(self, states: np.ndarray) -> np.ndarray:
        return states.astype(float)

    def run_chunk(self, state, t, t_stop, holds, picks):
        times = np.empty(holds.size)
        states = np.empty(holds.size, dtype=np.int64)
        n, state, t, done = _counter_chunk(state, t, t_stop, self.lam, self.mu, holds, picks, times, states)
        return times[:n], states[:n], int(state), float(t), bool(done)


def realization_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for realization ``index`` of master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def resolve_grid(model: JumpModel, cfg: SimConfig) -> tuple[float, int]:
    """Sampling step and power-of-two sample count covering ``t_end``."""
    dt = cfg.sample_dt if cfg.sample_dt is not None else 1.0 / (4.0 * model.max_exit_rate)
    n_samples = 2 ** max(1, int(round(np.log2(cfg.t_end / dt))))
    if not np.isclose(n_samples * dt, cfg.t_end, rtol=1e-9):
        logger.debug("Horizon %.6g rounded to %d samples of %.6g", cfg.t_end, n_samples, dt)
    return dt, n_samples


def _start(model: JumpModel, cfg: SimConfig, rng: np.random.Generator) -> int:
    if cfg.initial_state == STATIONARY:
        return model.initial_state(rng)
    state = int(cfg.initial_state)
    if state < 0 or (isinstance(model, FiniteChain) and state >= model.n):
        raise ValueError(f"initial state {state} out of range")
    return state


def _event_chunks(
    model: JumpModel, cfg: SimConfig, index: int, horizon: float
) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    """Yield the initial state, then event chunks ``(times, states)`` up to ``horizon``.

    Times are shifted so that the burn-in ends at t = 0; burn-in events carry
    negative times.
    """
    rng = realization_rng(cfg.seed, index)
    state = _start(model, cfg, rng)
    yield state, np.empty(0), np.empty(0, dtype=np.int64)
    t = -cfg.effective_burn_in
    done = False
    while not done:
        holds = -np.log1p(-rng.random(CHUNK_EVENTS))
        picks = rng.random(CHUNK_EVENTS)
        times, states, state, t, done = model.run_chunk(state, t, horizon, holds, picks)
        yield state, times, states


def gillespie_path(model: JumpModel, cfg: SimConfig, realization_index: int = 0) -> Trajectory:
    dt, n_samples = resolve_grid(model, cfg)
    horizon = dt * n_samples
    chunks = _event_chunks(model, cfg, realization_index, horizon)
    initial, _, _ = next(chunks)
    all_times: list[np.ndarray] = []
    all_states: list[np.ndarray] = []
    for _, times, states in chunks:
        all_times.append(times)
        all_states.append(states)
    times = np.concatenate([np.empty(0)] + all_times)
    states = np.concatenate([np.empty(0, dtype=np.int64)] + all_states)
    burn = times < 0.0
    if burn.any():
        initial = int(states[burn][-1])
        times, states = times[~burn], states[~burn]
    return Trajectory(
        jump_times=np.concatenate(([0.0], times)),
        states=np.concatenate(([initial], states)).astype(np.int64),
        t_end=horizon,
    )


def resample_uniform(traj: Trajectory, sample_dt: float, n_samples: int | None = None) -> np.ndarray:
    """States held at ``t_j = j · sample_dt`` (previous-event hold)."""
    if sample_dt <= 0.0:
        raise ValueError(f"sample_dt must be positive (got {sample_dt})")
    n_samples = int(round(traj.t_end / sample_dt)) if n_samples is None else n_samples
    grid = np.arange(n_samples) * sample_dt
    idx = np.searchsorted(traj.jump_times, grid, side="right") - 1
    return traj.states[np.clip(idx, 0, None)]


class _GridSampler:
    """Hold-resamples an event stream onto a uniform grid without storing it."""

    def __init__(self, n_samples: int, sample_dt: float, state: int) -> None:
        self.samples = np.empty(n_samples, dtype=np.int64)
        self.dt = sample_dt
        self.pos = 0
        self.state = state

    def feed(self, times: np.ndarray, states: np.ndarray) -> None:
        if times.size == 0:
            return
        # grid points strictly before the last event, counted in the float
        # arithmetic resample_uniform uses
        last = float(times[-1])
        stop = max(self.pos, int(np.ceil(last / self.dt)))
        while stop > self.pos and (stop - 1) * self.dt >= last:
            stop -= 1
        while stop < self.samples.size and stop * self.dt < last:
            stop += 1
        stop = min(stop, self.samples.size)
        if stop > self.pos:
            grid = np.arange(self.pos, stop) * self.dt
            idx = np.searchsorted(times, grid, side="right")
            held = np.concatenate(([self.state], states))
            self.samples[self.pos : stop] = held[idx]
            self.pos = stop
        self.state = int(states[-1])

    def finish(self) -> np.ndarray:
        self.samples[self.pos :] = self.state
        self.pos = self.samples.size
        return self.samples


def sample_path_on_grid(model: JumpModel, cfg: SimConfig, realization_index: int = 0) -> np.ndarray:
    """Observable on the sampling grid; same draws as ``gillespie_path`` + ``resample_uniform``."""
    dt, n_samples = resolve_grid(model, cfg)
    chunks = _event_chunks(model, cfg, realization_index, dt * n_samples)
    initial, _, _ = next(chunks)
    sampler = _GridSampler(n_samples, dt, initial)
    for _, times, states in chunks:
        sampler.feed(times, states)
    return model.observe(sampler.finish())


def occupation_fractions(traj: Trajectory, n: int) -> np.ndarray:
    """Exact fraction of ``[0, t_end)`` spent in each of the n states."""
    if traj.states.max() >= n:
        raise ValueError(f"trajectory visits state {traj.states.max()} outside {n} states")
    return np.bincount(traj.states, weights=traj.holding_times(), minlength=n) / traj.t_end


def time_average(traj: Trajectory, values: ArrayLike | None = None) -> float:
    """Event-weighted time average of ``values[state]`` (the state itself by default)."""
    observed = traj.states.astype(float) if values is None else np.asarray(values, dtype=float)[traj.states]
    return float(np.dot(observed, traj.holding_times()) / traj.t_end)

"""One-sided periodograms and their realization averages."""

from __future__ import annotations

import math
from dataclasses import dataclass
from multiprocessing import Pool

import numpy as np
import pandas as pd
import scipy.fft
import scipy.signal
from numpy.typing import ArrayLike

from ..core import ProgressReporter, logger
from .gillespie import JumpModel, SimConfig, resolve_grid, sample_path_on_grid

WINDOWS = ("none", "hann")


@dataclass(frozen=True, eq=False)
class Periodogram:
    """Power at ``f_j = j / (N·dt)``, ``j = 1..N/2``; ``sum(power)·df`` is the variance."""

    freqs: np.ndarray
    power: np.ndarray
    n_realizations: int
    sample_dt: float
    window: str = "none"
    mean: float = math.nan

    @property
    def df(self) -> float:
        return float(self.freqs[0])

    @property
    def nyquist(self) -> float:
        return 0.5 / self.sample_dt

    def total_power(self) -> float:
        return float(np.sum(self.power) * self.df)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"freq": self.freqs, "power": self.power})


def _taper(n: int, window: str) -> np.ndarray | None:
    if window == "none":
        return None
    if window == "hann":
        taper = scipy.signal.get_window("hann", n, fftbins=True)
        return taper / np.sqrt(np.mean(taper**2))
    raise ValueError(f"window must be one of {WINDOWS} (got {window!r})")


def periodogram(series: ArrayLike, sample_dt: float, *, window: str = "none") -> Periodogram:
    """Mean-removed one-sided periodogram of a uniformly sampled series.

    Interior bins carry a factor 2 and the Nyquist bin a factor 1, so the
    power integrates to the population variance of the (windowed) series.
    """
    values = np.asarray(series, dtype=float)
    n = values.size
    if values.ndim != 1 or n < 2 or n & (n - 1):
        raise ValueError(f"series length must be a power of two >= 2 (got {values.shape})")
    if sample_dt <= 0.0:
        raise ValueError(f"sample_dt must be positive (got {sample_dt})")

    centred = values - values.mean()
    taper = _taper(n, window)
    if taper is not None:
        centred = centred * taper
    spectrum = scipy.fft.rfft(centred)[1:]
    power = (sample_dt / n) * np.abs(spectrum) ** 2
    power[:-1] *= 2.0
    freqs = np.arange(1, n // 2 + 1) / (n * sample_dt)
    return Periodogram(
        freqs=freqs, power=power, n_realizations=1, sample_dt=sample_dt, window=window, mean=float(values.mean())
    )


def _realization_power(job: tuple[JumpModel, SimConfig, int]) -> tuple[np.ndarray, float]:
    model, cfg, index = job
    dt, _ = resolve_grid(model, cfg)
    pg = periodogram(sample_path_on_grid(model, cfg, index), dt, window=cfg.window)
    return pg.power, pg.mean


def averaged_periodogram(model: JumpModel, cfg: SimConfig, *, progress: bool = True) -> Periodogram:
    """Mean periodogram over ``cfg.n_realizations`` independent paths.

    Sums are accumulated in realization order, so the result does not depend
    on ``cfg.workers``.
    """
    dt, n_samples = resolve_grid(model, cfg)
    logger.debug(
        "Averaging %d realizations of %d samples (dt=%.6g, workers=%d)",
        cfg.n_realizations,
        n_samples,
        dt,
        cfg.workers,
    )
    jobs = [(model, cfg, index) for index in range(cfg.n_realizations)]
    total = np.zeros(n_samples // 2)
    mean_total = 0.0
    with ProgressReporter(cfg.n_realizations, "Realizations", unit="realization", enabled=progress) as reporter:
        if cfg.workers > 1:
            with Pool(processes=cfg.workers) as pool:
                for index, (power, mean) in enumerate(pool.imap(_realization_power, jobs)):
                    total += power
                    mean_total += mean
                    reporter.step(f"realization {index}")
        else:
            for index, job in enumerate(jobs):
                power, mean = _realization_power(job)
                total += power
                mean_total += mean
                reporter.step(f"realization {index}")
    freqs = np.arange(1, n_samples // 2 + 1) / (n_samples * dt)
    return Periodogram(
        freqs=freqs,
        power=total / cfg.n_realizations,
        n_realizations=cfg.n_realizations,
        sample_dt=dt,
        window=cfg.window,
        mean=mean_total / cfg.n_realizations,
    )

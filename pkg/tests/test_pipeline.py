from __future__ import annotations

import json

import numpy as np
import pandas as pd
import pytest

from ctmc_noise.analysis import synthetic_spectrum
from ctmc_noise.core import load_config
from ctmc_noise.pipeline import (
    RunConfig,
    cmd_fit,
    cmd_simulate,
    analytic_eigenstructure,
    cmd_spectrum,
    default_horizon,
    load_eigenstructure,
    measured_band,
    model_eigenstructure,
)
from ctmc_noise.chain import ModelSpec


def _config(tmp_path, **values) -> RunConfig:
    return RunConfig.from_mapping({"out_dir": str(tmp_path), "progress": False, **values})


def test_run_config_round_trip(tmp_path):
    cfg = _config(tmp_path, model="ring", n=12, seed=4, dt=0.5, k_range="5,10", band=[0.01, 1.0])
    assert cfg.k_range == (5, 10)
    assert cfg.band == (0.01, 1.0)
    again = RunConfig.from_mapping({**cfg.to_config(), "progress": False})
    assert again == cfg


def test_run_config_errors(tmp_path):
    with pytest.raises(ValueError):
        _config(tmp_path, band="1,2,3")
    with pytest.raises(ValueError):
        _config(tmp_path, omega_points=1)


def test_spectrum_of_ring(tmp_path):
    summary = cmd_spectrum(_config(tmp_path, model="ring", n=16, **{"lambda": 1.0, "mu": 1.0}))
    assert summary["n_modes"] == 15
    assert summary["n_distinct"] == 8
    assert summary["variance"] == pytest.approx((16**2 - 1) / 12.0, rel=1e-10)
    es = load_eigenstructure(tmp_path / "eigenstructure.csv")
    assert summary["diffusion"] == pytest.approx(float(np.sum(es.gammas_sq / es.omegas)), rel=1e-10)
    psd = pd.read_csv(tmp_path / "psd.csv")
    assert list(psd.columns) == ["omega", "psd"]
    assert len(psd) == 200
    assert np.all(np.diff(psd["psd"]) < 0.0)
    assert json.loads((tmp_path / "summary.json").read_text())["n_modes"] == 15
    assert load_config(tmp_path / "config.toml")["model"] == "ring"


def test_spectrum_of_large_queue_uses_banded_solver(tmp_path):
    summary = cmd_spectrum(_config(tmp_path, model="mm1", n=3000, **{"lambda": 1.0, "mu": 1.01}))
    rho = 1.0 / 1.01
    assert summary["n_modes"] == 2999
    assert summary["variance"] == pytest.approx(rho / (1.0 - rho) ** 2, rel=1e-6)


def test_closed_form_models_share_eigenstructure():
    open_queue = model_eigenstructure(ModelSpec(kind="mm1-open", n=200, eps=1e-2))
    toeplitz = model_eigenstructure(ModelSpec(kind="toeplitz", n=200, eps=1e-2))
    np.testing.assert_allclose(open_queue.omegas, toeplitz.omegas)
    np.testing.assert_allclose(open_queue.gammas_sq, toeplitz.gammas_sq)


def test_fit_open_queue(tmp_path):
    report = cmd_fit(_config(tmp_path, model="mm1-open", n=1000, eps=1e-4))
    assert report["alpha"] == pytest.approx(2.0, abs=0.02)
    assert report["beta"] == pytest.approx(-1.0, abs=0.05)
    assert report["admissible"]
    assert report["zeta_predicted"] == pytest.approx(-1.5, abs=0.05)
    assert report["zeta_measured"] == pytest.approx(-1.5, abs=0.1)
    assert (tmp_path / "fit.json").exists()


def test_fit_ring(tmp_path):
    report = cmd_fit(_config(tmp_path, model="ring", n=1000, **{"lambda": 1.0, "mu": 1.0}))
    assert report["alpha"] == pytest.approx(2.0, abs=0.02)
    assert report["beta"] == pytest.approx(-1.0, abs=0.05)


def test_fit_from_eigenstructure_file(tmp_path):
    spec = synthetic_spectrum(2.0, -0.5, 2000)
    source = tmp_path / "eig.csv"
    pd.DataFrame({"k": np.arange(1, 2001), "omega": spec.omegas, "gamma_sq": spec.gammas_sq}).to_csv(source, index=False)
    report = cmd_fit(_config(tmp_path / "fit", eigenstructure=str(source)))
    assert report["k_range"] == [5, 200]
    assert report["zeta_predicted"] == pytest.approx(-1.0, abs=1e-9)
    assert report["K"] == pytest.approx(1.0 / 12.0)
    assert report["zeta_measured"] == pytest.approx(-1.0, abs=0.02)
    assert report["source"] == str(source)


def test_eigenstructure_file_needs_columns(tmp_path):
    source = tmp_path / "bad.csv"
    pd.DataFrame({"k": [1, 2], "omega": [1.0, 2.0]}).to_csv(source, index=False)
    with pytest.raises(ValueError, match="gamma_sq"):
        load_eigenstructure(source)


def test_measured_band_spans_a_decade():
    spec = synthetic_spectrum(2.0, -1.0, 100)
    assert measured_band(spec, (5, 10)) == (100.0, 1000.0)
    assert measured_band(spec, (5, 50)) == (100.0, 2500.0)


def test_simulate_finite_chain_is_reproducible(tmp_path):
    values = {"model": "telegraph", "lambda": 1.0, "mu": 1.0, "seed": 3, "t_end": 256.0, "dt": 0.25, "realizations": 4}
    summary = cmd_simulate(_config(tmp_path / "a", **values))
    for name in ("config.toml", "periodogram.csv", "trajectory.csv", "comparison.csv", "summary.json"):
        assert (tmp_path / "a" / name).exists()
    assert summary["n_samples"] == 1024
    assert summary["variance"] == pytest.approx(0.25, rel=0.1)
    assert "comparison" in summary

    snapshot = load_config(tmp_path / "a" / "config.toml")
    cmd_simulate(RunConfig.from_mapping({**snapshot, "out_dir": str(tmp_path / "b"), "progress": False}))
    for name in ("periodogram.csv", "trajectory.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    trajectory = pd.read_csv(tmp_path / "a" / "trajectory.csv")
    assert list(trajectory.columns) == ["time", "state"]
    assert trajectory["time"].iloc[0] == 0.0


def test_simulate_counter_reports_expected_mean(tmp_path):
    values = {"model": "mm1", "lambda": 1.0, "mu": 2.0, "seed": 1, "t_end": 4096.0, "realizations": 2}
    summary = cmd_simulate(_config(tmp_path, **values))
    assert summary["expected_mean"] == pytest.approx(1.0)
    assert summary["time_average"] == pytest.approx(1.0, rel=0.2)
    assert not (tmp_path / "comparison.csv").exists()


def test_unset_t_end_is_filled_from_the_slowest_mode(tmp_path):
    horizons = {}
    for eps in (0.1, 0.01):
        cfg = _config(tmp_path, model="mm1", n=200, eps=eps, seed=1)
        assert cfg.auto_t_end
        rates = cfg.model.birth_death_rates()
        omegas = np.sort(-np.linalg.eigvals(rates.generator().entries).real)
        filled = default_horizon(cfg, analytic_eigenstructure(cfg.model))
        assert not filled.auto_t_end
        assert filled.sim.t_end == pytest.approx(100.0 / omegas[1], rel=1e-6)
        horizons[eps] = filled.sim.t_end
    assert horizons[0.01] > 5.0 * horizons[0.1]


def test_ring_horizon_and_floor(tmp_path):
    ring = _config(tmp_path, model="ring", n=200, seed=1)
    filled = default_horizon(ring, analytic_eigenstructure(ring.model))
    assert filled.sim.t_end == pytest.approx(100.0 / (2.0 - 2.0 * np.cos(2.0 * np.pi / 200)), rel=1e-9)

    telegraph = _config(tmp_path, model="telegraph", seed=1)
    assert default_horizon(telegraph, analytic_eigenstructure(telegraph.model)).sim.t_end == 4096.0

    explicit = _config(tmp_path, model="ring", n=200, seed=1, t_end=64.0)
    assert not explicit.auto_t_end
    assert default_horizon(explicit, analytic_eigenstructure(explicit.model)) == explicit


def test_simulate_records_the_filled_horizon(tmp_path):
    cfg = _config(tmp_path, model="mm1", n=200, eps=0.1, seed=2, realizations=1, dt=8.0)
    expected = 100.0 / float(np.min(model_eigenstructure(cfg.model).omegas))
    summary = cmd_simulate(cfg)
    assert summary["sim"]["t_end"] == pytest.approx(expected)
    assert load_config(tmp_path / "config.toml")["t_end"] == pytest.approx(expected)

from __future__ import annotations

import argparse
from collections.abc import Sequence
from typing import Any

from .chain import MODEL_KINDS, OBSERVABLES
from .core import configure_logging, load_config, logger
from .pipeline import DEFAULT_OUT_DIR, RunConfig, cmd_fit, cmd_simulate, cmd_spectrum
from .verify import CHECKS, cmd_verify

COMMANDS = ("spectrum", "simulate", "fit", "verify")
EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID = 0, 1, 2
_SECTIONS = ("model", "sim", "analysis", "verify")
# argparse dest -> config key
_KEY_ALIASES = {"lam": "lambda"}


def _flatten_config(config: dict[str, Any]) -> dict[str, Any]:
    # Allow optional grouping inside the config (e.g. [model], [sim]).
    flat = {k: v for k, v in config.items() if not isinstance(v, dict)}
    for key in _SECTIONS:
        section = config.get(key)
        if isinstance(section, dict):
            flat.update(section)
    return {k.replace("-", "_"): v for k, v in flat.items()}


def merge_config(args: argparse.Namespace, config: dict[str, Any]) -> dict[str, Any]:
    """Flags win over config values; unset flags fall back to the config."""
    merged = _flatten_config(config) if config else {}
    for dest, value in vars(args).items():
        if dest in {"command", "config"} or value is None:
            continue
        merged[_KEY_ALIASES.get(dest, dest)] = value
    if "verbose" in merged and not isinstance(merged["verbose"], bool):
        raise ValueError(f"verbose must be a boolean (got {merged['verbose']!r})")
    return merged


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ctmc-noise",
        description="Spectral analysis and Gillespie simulation of 1/f-type noise in Markov chains",
    )
    ap.add_argument("command", choices=COMMANDS, help="Which pipeline to run")
    ap.add_argument("--config", help="Optional TOML/JSON config file with argument defaults")
    ap.add_argument("--model", choices=MODEL_KINDS, default=None, help="Model kind (default: mm1)")
    ap.add_argument("--n", type=int, help="Number of states (peripheral states for star)")
    ap.add_argument("--eps", type=float, help="Heavy-traffic parameter: lambda=1, mu=1+eps")
    ap.add_argument("--lambda", dest="lam", type=float, help="Birth / clockwise / centre-out rate")
    ap.add_argument("--mu", type=float, help="Death / counterclockwise / inward rate")
    ap.add_argument("--lambdas", help="Comma-separated birth rates for --model birth-death")
    ap.add_argument("--mus", help="Comma-separated death rates for --model birth-death")
    ap.add_argument("--observable", choices=OBSERVABLES, default=None, help="State observable (default: index)")
    ap.add_argument("--seed", type=int, help="Master RNG seed (required for simulate)")
    ap.add_argument("--out-dir", help=f"Run directory (default: {DEFAULT_OUT_DIR})")
    ap.add_argument("--realizations", type=int, help="Number of averaged realizations")
    ap.add_argument("--t-end", type=float, help="Simulation horizon, rounded to a power-of-two grid (default: max(4096, 100/omega_min))")
    ap.add_argument("--dt", type=float, help="Sampling step (default: 1/(4 max exit rate))")
    ap.add_argument("--initial-state", help="State index or 'stationary'")
    ap.add_argument("--burn-in", type=float, help="Discarded warm-up time (default: 10%% of t_end for fixed starts)")
    ap.add_argument("--window", choices=["none", "hann"], default=None, help="Periodogram taper")
    ap.add_argument("--workers", type=int, help="Worker processes for realizations")
    ap.add_argument("--eigenstructure", help="CSV with k, omega, gamma_sq columns (fit)")
    ap.add_argument("--k-range", help="Fit window k_min,k_max (fit)")
    ap.add_argument("--band", help="Frequency band lo,hi for slope estimates")
    ap.add_argument("--omega-points", type=int, help="Points on the analytic PSD grid (spectrum)")
    ap.add_argument("--quick", action="store_true", default=None, help="Run the fast subset of checks (verify)")
    ap.add_argument("--tolerance-scale", type=float, help="Multiply every check tolerance (verify)")
    ap.add_argument("--only", action="append", choices=[c[0] for c in CHECKS], help="Run only these checks (repeat)")
    ap.add_argument("--no-progress", dest="progress", action="store_false", default=None, help="Disable progress bars")
    ap.add_argument("-v", "--verbose", action="store_true", default=None, help="Verbose logging")
    return ap


def run(command: str, merged: dict[str, Any]) -> int:
    if command == "verify":
        only = merged.get("only")
        ok, _ = cmd_verify(
            merged.get("out_dir") or DEFAULT_OUT_DIR,
            seed=int(merged.get("seed", 0)),
            quick=bool(merged.get("quick", False)),
            tolerance_scale=float(merged.get("tolerance_scale", 1.0)),
            progress=bool(merged.get("progress", True)),
            only=set(only) if only else None,
        )
        return EXIT_OK if ok else EXIT_CHECK_FAILED

    if command == "simulate" and merged.get("seed") is None:
        raise ValueError("simulate needs a seed (supply --seed or 'seed' in the config)")
    cfg = RunConfig.from_mapping(merged)
    match command:
        case "spectrum":
            cmd_spectrum(cfg)
        case "simulate":
            cmd_simulate(cfg)
        case "fit":
            cmd_fit(cfg)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        merged = merge_config(args, load_config(args.config) if args.config else {})
    except (ValueError, FileNotFoundError) as exc:
        configure_logging(False)
        logger.error("%s", exc)
        return EXIT_INVALID
    configure_logging(bool(merged.get("verbose", False)))
    try:
        return run(args.command, merged)
    except (ValueError, FileNotFoundError) as exc:
        logger.error("%s", exc)
        return EXIT_INVALID

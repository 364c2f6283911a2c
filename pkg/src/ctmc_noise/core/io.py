"""IO helper utilities: run directories, CSV/JSON writers and config files."""

from __future__ import annotations

import json
import math
import numbers
import sys
from collections.abc import Mapping
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

import numpy as np
import pandas as pd

from .logging import logger

CSV_FLOAT_FORMAT = "%.17g"


def ensure_run_dir(path: str | Path) -> Path:
    target = Path(path)
    target.mkdir(parents=True, exist_ok=True)
    return target


def sanitize_value(value: Any) -> Any:
    """Convert numpy/pandas values into JSON-friendly Python objects."""
    if value is None:
        return None
    if isinstance(value, (np.ndarray, pd.Series, pd.Index)):
        return [sanitize_value(v) for v in value.tolist()]
    if isinstance(value, (list, tuple, set)):
        return [sanitize_value(v) for v in list(value)]
    if isinstance(value, Mapping):
        return {str(k): sanitize_value(v) for k, v in value.items()}
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, numbers.Integral):
        return int(value)
    if isinstance(value, numbers.Real):
        if not math.isfinite(float(value)):
            return None
        return float(value)
    return value


def write_json(path: str | Path, payload: Any) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8") as handle:
        json.dump(sanitize_value(payload), handle, indent=2)
    logger.info("Wrote %s", target)
    return target


def write_csv(path: str | Path, columns: Mapping[str, Any]) -> Path:
    """Write equal-length columns as CSV with full float precision."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({name: np.asarray(values) for name, values in columns.items()})
    frame.to_csv(target, index=False, float_format=CSV_FLOAT_FORMAT)
    logger.info("Wrote %s (%d rows)", target, len(frame))
    return target


def read_csv_columns(path: str | Path, required: set[str]) -> pd.DataFrame:
    frame = pd.read_csv(path)
    frame.columns = [str(c).strip().lower() for c in frame.columns]
    missing = required - set(frame.columns)
    if missing:
        raise ValueError(f"{path} missing columns: {sorted(missing)}")
    return frame


def load_config(path: str | Path) -> dict[str, Any]:
    config_path = Path(path)
    if not config_path.exists():
        raise FileNotFoundError(f"Config file not found: {config_path}")
    suffix = config_path.suffix.lower()
    if suffix in {".toml", ".tml"}:
        return tomllib.loads(config_path.read_text(encoding="utf-8"))
    if suffix == ".json":
        return json.loads(config_path.read_text(encoding="utf-8"))
    raise ValueError(f"Unsupported config format: {config_path.suffix}")


def _toml_scalar(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        return repr(float(value))
    return json.dumps(str(value))


def write_config_snapshot(path: str | Path, config: Mapping[str, Any]) -> Path:
    """Write a flat ``key = value`` TOML file; ``None`` values are omitted."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# effective run configuration"]
    for key in sorted(config):
        value = config[key]
        if value is None:
            continue
        if isinstance(value, (list, tuple)):
            items = ", ".join(_toml_scalar(v) for v in value)
            lines.append(f"{key} = [{items}]")
        else:
            lines.append(f"{key} = {_toml_scalar(value)}")
    target.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("Wrote %s", target)
    return target

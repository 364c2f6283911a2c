"""Core utilities shared by the toolkit."""

from .logging import configure_logging, logger, ProgressReporter
from .io import (
    ensure_run_dir,
    sanitize_value,
    write_json,
    write_csv,
    read_csv_columns,
    load_config,
    write_config_snapshot,
)

__all__ = [
    "configure_logging",
    "logger",
    "ProgressReporter",
    "ensure_run_dir",
    "sanitize_value",
    "write_json",
    "write_csv",
    "read_csv_columns",
    "load_config",
    "write_config_snapshot",
]

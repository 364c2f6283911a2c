"""Project logger, loguru bridge and progress reporting for long runs."""

from __future__ import annotations

import logging
import sys

try:  # Optional dependency that provides richer progress bars.
    from tqdm.auto import tqdm  # type: ignore
except ModuleNotFoundError:  # pragma: no cover
    tqdm = None  # type: ignore

try:
    from loguru import logger as _loguru_logger  # type: ignore
except ModuleNotFoundError:  # pragma: no cover
    _loguru_logger = None  # type: ignore[assignment]

logger = logging.getLogger("ctmc_noise")

_LOGURU_FORMAT = (
    "<green>{time:HH:mm:ss.SSS}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan> - "
    "<level>{message}</level>"
)
# JIT compilation chatter; kept at WARNING even in verbose runs
_QUIET_LOGGERS = ("numba",)

_intercepting = False


class InterceptHandler(logging.Handler):
    """Forward stdlib records to loguru, keeping the caller's frame."""

    def emit(self, record: logging.LogRecord) -> None:
        try:
            level = _loguru_logger.level(record.levelname).name
        except ValueError:
            level = record.levelno
        frame, depth = logging.currentframe(), 2
        while frame and frame.f_code.co_filename == logging.__file__:
            frame = frame.f_back
            depth += 1
        _loguru_logger.opt(depth=depth, exception=record.exc_info).log(level, record.getMessage())


def configure_logging(verbose: bool = False) -> None:
    """Route the ``ctmc_noise`` logger through loguru, or plain stderr without it.

    Safe to call repeatedly; later calls only change the level.
    """
    global _intercepting
    level = logging.DEBUG if verbose else logging.INFO
    for name in _QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)

    if _loguru_logger is None:
        logging.basicConfig(format="%(levelname)s: %(message)s", level=level)
        logger.setLevel(level)
        return

    _loguru_logger.remove()
    _loguru_logger.add(sys.stderr, level=logging.getLevelName(level), format=_LOGURU_FORMAT, colorize=sys.stderr.isatty())
    if not _intercepting:
        logging.basicConfig(handlers=[InterceptHandler()], level=logging.DEBUG)
        _intercepting = True
    logger.setLevel(level)


class ProgressReporter:
    """Counts realizations or checks; a tqdm bar on a terminal, log lines otherwise."""

    def __init__(self, total_steps: int, label: str = "Progress", *, unit: str = "step", enabled: bool = True) -> None:
        self.total_steps = max(int(total_steps) if total_steps else 1, 1)
        self.label = label
        self.unit = unit
        self.enabled = enabled
        self._bar = None
        self._done = 0
        self._closed = False

    def __enter__(self) -> ProgressReporter:
        if not self.enabled:
            return self
        if tqdm is not None and sys.stderr.isatty():
            self._bar = tqdm(total=self.total_steps, desc=self.label, unit=self.unit, leave=False, dynamic_ncols=True)
        else:
            logger.info("%s: %d %s(s)", self.label, self.total_steps, self.unit)
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        if exc_type is not None:
            if self.enabled:
                logger.error("%s failed after %d/%d %s(s)", self.label, self._done, self.total_steps, self.unit)
            self._close()
            return False
        self.finish()
        return False

    @property
    def done(self) -> int:
        return self._done

    def step(self, message: str = "") -> None:
        self._done = min(self.total_steps, self._done + 1)
        if not self.enabled:
            return
        if self._bar is not None:
            self._bar.update(1)
            if message:
                self._bar.set_postfix_str(message, refresh=False)
        else:
            logger.debug("%s %d/%d %s", self.label, self._done, self.total_steps, message)

    def finish(self) -> None:
        if self._closed:
            return
        if self._bar is None and self.enabled:
            logger.info("%s complete (%d/%d)", self.label, self._done, self.total_steps)
        self._close()

    def _close(self) -> None:
        if self._bar is not None:
            self._bar.close()
            self._bar = None
        self._closed = True

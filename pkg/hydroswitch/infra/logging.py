"""Stdlib logging configuration helpers for HydroSwitch."""
from __future__ import annotations

import logging
import os
import sys
from typing import Iterable, Optional

_DEFAULT_FORMAT = "[%(asctime)s] [%(levelname)s] %(name)s: %(message)s"
_DEFAULT_DATEFMT = "%Y-%m-%d %H:%M:%S"
_NOISY_LOGGERS = ("matplotlib", "numba", "concurrent.futures")


def configure_logging(
    *,
    level: int | str = logging.INFO,
    handlers: Optional[Iterable[logging.Handler]] = None,
    rich: bool = False,
) -> None:
    """Configure the root logger.

    Args:
        level: Logging level (numeric or string).
        handlers: Custom handlers to attach. When ``None`` a default stream
            handler is used.
        rich: When true, attempt to use RichHandler if available.
    """

    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()

    if isinstance(level, str):
        level = level.upper()
    root.setLevel(level)

    if handlers is None:
        handlers = [_build_default_handler(rich=rich)]

    for handler in handlers:
        root.addHandler(handler)

    logging.captureWarnings(True)

    # Third-party chatter stays at WARNING unless the run itself is in DEBUG
    third_party_env = os.getenv("HYDROSWITCH_LOG_THIRD_PARTY_LEVEL")
    if third_party_env:
        third_party_level = getattr(logging, third_party_env.upper(), logging.WARNING)
    else:
        third_party_level = logging.WARNING if root.level > logging.DEBUG else root.level
    for name in _NOISY_LOGGERS:
        logging.getLogger(name).setLevel(third_party_level)


def _build_default_handler(*, rich: bool) -> logging.Handler:
    if rich:
        try:
            from rich.logging import RichHandler

            # Rich logs go to stderr so CLI tables on stdout stay clean
            return RichHandler(
                markup=False,
                show_time=True,
                show_path=False,
                rich_tracebacks=True,
            )
        except Exception:  # pragma: no cover - fallback to stdlib
            pass
    # Anchor to the original stderr so redirected sys streams do not leave a closed handle.
    handler = logging.StreamHandler(stream=getattr(sys, "__stderr__", sys.stderr))
    handler.setFormatter(logging.Formatter(_DEFAULT_FORMAT, datefmt=_DEFAULT_DATEFMT))
    return handler


def setup_for_environment(level_override: str | None = None) -> None:
    """Configure logging from settings, optionally overriding the level."""

    try:
        from config.settings import Settings
    except Exception:
        Settings = None  # type: ignore[assignment]

    level = level_override
    if not level and Settings is not None:
        level = Settings.get("HYDROSWITCH_LOG_LEVEL") or None
    if not level:
        level = "INFO"

    use_rich = False
    if Settings is not None:
        val = Settings.get("HYDROSWITCH_LOG_RICH")
        if isinstance(val, bool):
            use_rich = val
        elif isinstance(val, str):
            use_rich = val.strip().lower() in {"1", "true", "yes"}

    configure_logging(level=level, rich=use_rich)

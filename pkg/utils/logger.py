"""Logging helpers built on the stdlib logging module."""
from __future__ import annotations

import logging
from typing import Optional


BASE_LOGGER = logging.getLogger("hydroswitch")


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """Return a logger rooted under the ``hydroswitch`` namespace."""

    if not name:
        return BASE_LOGGER
    if name.startswith("hydroswitch"):
        return logging.getLogger(name)
    return logging.getLogger(f"hydroswitch.{name}")


def set_debug_mode(enabled: bool) -> None:
    """Enable or disable debug logging for the hydroswitch logger hierarchy."""

    BASE_LOGGER.setLevel(logging.DEBUG if enabled else logging.NOTSET)


def is_debug_enabled() -> bool:
    """Return True when the hydroswitch logger is running at DEBUG level."""

    return BASE_LOGGER.getEffectiveLevel() <= logging.DEBUG

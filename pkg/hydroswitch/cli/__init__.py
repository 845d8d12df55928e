"""Command-line frontend: ``run``, ``sweep`` and ``report``."""

from hydroswitch.cli.app import build_parser, main

__all__ = ["build_parser", "main"]

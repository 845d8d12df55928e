"""Argument parsing and exit-code mapping for the HydroSwitch CLI."""
from __future__ import annotations

import argparse
from typing import List, Optional

from pydantic import ValidationError

from hydroswitch.cli import report, run, sweep
from hydroswitch.cli.common import ArgumentParser, ExitCode, UsageError
from hydroswitch.infra.logging import setup_for_environment
from utils.logger import get_logger, is_debug_enabled, set_debug_mode
from version import __version__


logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(
        prog="hydroswitch",
        description="Richards equation solver with adaptive L-scheme/Newton linearisation",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)
    run.register(subparsers)
    sweep.register(subparsers)
    report.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage()
        logger.error(str(exc))
        return int(ExitCode.BAD_INPUT)

    setup_for_environment(args.log_level)
    set_debug_mode(args.verbose)
    args.argv = ["hydroswitch", *argv] if argv is not None else None
    try:
        return int(args.handler(args))
    except (UsageError, ValidationError, ValueError, FileNotFoundError) as exc:
        logger.error(f"❌ {exc}")
        if is_debug_enabled():
            logger.exception("Traceback")
        return int(ExitCode.BAD_INPUT)


__all__ = ["build_parser", "main"]

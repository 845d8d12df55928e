"""``report``: indicator ratios and effectivity indices from an iterations log."""
from __future__ import annotations

import argparse
from pathlib import Path
from typing import Dict, List, Optional

from rich.console import Console
from rich.table import Table

from hydroswitch.cli.common import ExitCode
from hydroswitch.utils.export import read_iterations_csv, write_table_csv
from utils.logger import get_logger


logger = get_logger(__name__)

REPORT_COLUMNS = ("step", "iter", "scheme", "ratio_LN", "ratio_NL", "ratio_LL", "eff_index")


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("report", help="Indicator ratios from an iterations.csv")
    parser.add_argument("csv", help="iterations.csv written by run or sweep")
    parser.add_argument("--out", default=None, help="Report CSV path (default: report.csv next to the input)")
    parser.add_argument("--log-level", dest="log_level", default=None)
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug output from the solver loggers")
    parser.set_defaults(handler=cmd_report)


def _ratio(value: Optional[float], eta_lin: Optional[float]) -> Optional[float]:
    if value is None or eta_lin is None or eta_lin <= 0.0:
        return None
    return value / eta_lin


def report_rows(rows: List[Dict[str, object]]) -> List[Dict[str, object]]:
    """η/η_lin for each logged estimator plus the logged effectivity index."""

    out: List[Dict[str, object]] = []
    for row in rows:
        eta = row["eta_lin"]
        out.append(
            {
                "step": row["step"],
                "iter": row["iter"],
                "scheme": row["scheme"],
                "ratio_LN": _ratio(row["eta_LN"], eta),  # type: ignore[arg-type]
                "ratio_NL": _ratio(row["eta_NL"], eta),  # type: ignore[arg-type]
                "ratio_LL": _ratio(row["eta_LL"], eta),  # type: ignore[arg-type]
                "eff_index": row["eff_index"],
            }
        )
    return out


def cmd_report(args: argparse.Namespace) -> int:
    source = Path(args.csv)
    if not source.is_file():
        raise FileNotFoundError(f"no iterations log at {source}")
    rows = report_rows(read_iterations_csv(source))
    target = Path(args.out) if args.out else source.with_name("report.csv")
    write_table_csv(target, REPORT_COLUMNS, rows)

    table = Table(title=f"Indicators: {source}")
    for column in REPORT_COLUMNS:
        table.add_column(column, justify="left" if column == "scheme" else "right")
    for row in rows:
        table.add_row(
            *(
                f"{v:.4g}" if isinstance(v, float) else ("" if v is None else str(v))
                for v in (row[c] for c in REPORT_COLUMNS)
            )
        )
    Console().print(table)
    effectivities = [r["eff_index"] for r in rows if r["eff_index"] is not None]
    if effectivities:
        logger.info(f"Effectivity indices: min {min(effectivities):.3f}, max {max(effectivities):.3f}")  # type: ignore[type-var]
    logger.info(f"📄 {len(rows)} report row(s) written to {target}")
    return int(ExitCode.CONVERGED)


__all__ = ["REPORT_COLUMNS", "register", "report_rows", "cmd_report"]

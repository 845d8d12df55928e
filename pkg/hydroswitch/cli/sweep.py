"""``sweep``: iteration counts over mesh sizes or time steps for several strategies."""
from __future__ import annotations

import argparse
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List

from rich.console import Console
from rich.table import Table

from config.settings import Settings
from hydroswitch.cli.common import (
    ExitCode,
    UsageError,
    add_case_arguments,
    add_output_arguments,
    add_solver_arguments,
    output_dir,
    resolve_case,
    solver_config,
)
from hydroswitch.core.services.driver import RunStatus, SolverConfig, Strategy, run_case
from hydroswitch.utils.export import write_iterations_csv, write_table_csv
from utils.logger import get_logger


logger = get_logger(__name__)

SWEEP_COLUMNS = (
    "case",
    "axis",
    "value",
    "strategy",
    "iterations",
    "l_iterations",
    "newton_iterations",
    "status",
    "failed_step",
    "bound_violations",
    "wall_ms",
)
DEFAULT_STRATEGIES = (Strategy.L.value, Strategy.NEWTON.value, Strategy.LN.value)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("sweep", help="Iteration counts over a mesh or time-step axis")
    add_case_arguments(parser)
    parser.add_argument("--axis", choices=("mesh", "tau"), default="mesh", help="Swept quantity (mesh: nx = √2/h)")
    parser.add_argument("--values", nargs="+", type=float, required=True, help="Axis values")
    parser.add_argument(
        "--strategies",
        nargs="*",
        choices=[s.value for s in Strategy],
        default=list(DEFAULT_STRATEGIES),
        help="Strategies to compare",
    )
    add_solver_arguments(parser)
    add_output_arguments(parser)
    parser.add_argument("--jobs", type=int, default=None, help="Concurrent runs (default from settings)")
    parser.set_defaults(handler=cmd_sweep)


def _entry_key(entry: Dict[str, Any]) -> str:
    value = entry["value"]
    text = str(int(value)) if entry["axis"] == "mesh" else f"{value:g}"
    return f"{entry['strategy']}_{entry['axis']}-{text}"


def run_entry(entry: Dict[str, Any]) -> Dict[str, Any]:
    """Solve one (value, strategy) pair; runs in a worker process."""

    case = resolve_case(entry["case"], **entry["case_overrides"])
    config = SolverConfig.model_validate(entry["config"])
    report = run_case(case, config)
    write_iterations_csv(Path(entry["out"]) / _entry_key(entry) / "iterations.csv", report.records, timings=config.timings)
    return {
        "case": case.name,
        "axis": entry["axis"],
        "value": entry["value"],
        "strategy": config.strategy.value,
        "iterations": report.total_iterations,
        "l_iterations": report.l_iterations,
        "newton_iterations": report.newton_iterations,
        "status": report.status.value,
        "failed_step": report.failed_step,
        "bound_violations": report.bound_violations,
        "wall_ms": report.wall_ms if config.timings else None,
    }


def build_entries(args: argparse.Namespace, out: Path) -> List[Dict[str, Any]]:
    if not args.strategies:
        raise UsageError("sweep needs at least one strategy")
    entries: List[Dict[str, Any]] = []
    for value in args.values:
        overrides: Dict[str, Any] = {"nz": args.nz, "tau": args.tau, "steps": args.steps}
        if args.axis == "mesh":
            if value < 1 or value != int(value):
                raise ValueError(f"mesh values are cell counts, got {value}")
            overrides["nx"] = int(value)
        else:
            overrides["tau"] = float(value)
            overrides["nx"] = args.nx
            overrides["h"] = args.h
        case = resolve_case(args.case, **overrides)
        for strategy in args.strategies:
            config = solver_config(args, strategy, case)
            entries.append(
                {
                    "case": args.case,
                    "case_overrides": overrides,
                    "axis": args.axis,
                    "value": value,
                    "strategy": strategy,
                    "config": config.model_dump(mode="json"),
                    "out": str(out),
                }
            )
    return entries


def render_table(rows: List[Dict[str, Any]]) -> Table:
    table = Table(title="Iterations")
    for column in ("axis", "value", "strategy", "iterations", "status"):
        table.add_column(column, justify="right" if column in ("value", "iterations") else "left")
    for row in rows:
        split = ""
        if row["strategy"] in (Strategy.LN.value, Strategy.LN_ADAPT.value):
            split = f" ({row['l_iterations']}/{row['newton_iterations']})"
        table.add_row(
            row["axis"],
            f"{row['value']:g}",
            row["strategy"],
            f"{row['iterations']}{split}",
            row["status"],
        )
    return table


def cmd_sweep(args: argparse.Namespace) -> int:
    out = output_dir(args, f"sweep-{args.case}-{args.axis}")
    entries = build_entries(args, out)
    jobs = max(1, args.jobs if args.jobs is not None else Settings.JOBS)
    logger.info(f"🔁 Sweep over {len(args.values)} {args.axis} value(s) × {len(args.strategies)} strategies, {jobs} job(s)")

    if jobs == 1:
        rows = [run_entry(entry) for entry in entries]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_entry, entries))

    path = write_table_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
    Console().print(render_table(rows))
    logger.info(f"📄 Sweep table written to {path}")
    failed = [row for row in rows if row["status"] != RunStatus.CONVERGED.value]
    if failed:
        logger.warning(f"❌ {len(failed)} of {len(rows)} run(s) did not converge")
        return int(ExitCode.DIVERGED)
    return int(ExitCode.CONVERGED)


__all__ = ["SWEEP_COLUMNS", "register", "run_entry", "build_entries", "render_table", "cmd_sweep"]

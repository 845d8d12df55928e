"""``run``: solve one case and write its iteration log, final field and manifest."""
from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field
from rich.console import Console

from hydroswitch.cli.common import (
    ExitCode,
    add_case_arguments,
    add_output_arguments,
    add_solver_arguments,
    output_dir,
    resolve_case,
    solver_config,
)
from hydroswitch.core.events import EventTopic, IterationPayload, RunPayload, StepPayload, subscribed
from hydroswitch.core.services.driver import RunReport, Strategy, run_case
from hydroswitch.utils.export import write_iterations_csv, write_vtk
from utils.helpers import safe_write_json
from utils.logger import get_logger
from version import __version__


logger = get_logger(__name__)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class RunManifest(BaseModel):
    invocation: List[str]
    case: Dict[str, Any]
    config: Dict[str, Any]
    version: str = __version__
    started_at: str = Field(default_factory=_now)
    finished_at: Optional[str] = None
    status: Optional[str] = None
    summary: Optional[str] = None
    total_iterations: Optional[int] = None
    bound_violations: Optional[int] = None
    outputs: List[str] = Field(default_factory=list)

    def write(self, path: Path) -> None:
        safe_write_json(str(path), self.model_dump(mode="json"))


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("run", help="Solve one case")
    add_case_arguments(parser)
    parser.add_argument(
        "--strategy",
        choices=[s.value for s in Strategy],
        default=Strategy.LN.value,
        help="Linearisation strategy",
    )
    add_solver_arguments(parser)
    add_output_arguments(parser)
    parser.set_defaults(handler=cmd_run)


def _log_step(payload: StepPayload) -> None:
    logger.info(
        f"✅ {payload.get('case')} step {payload.get('step')} t={payload.get('time', 0.0):.6g}: "
        f"{payload.get('l_iterations', 0) + payload.get('newton_iterations', 0)} iterations "
        f"({payload.get('l_iterations', 0)}/{payload.get('newton_iterations', 0)})"
    )


def execute_run(args: argparse.Namespace, *, console: Optional[Console] = None) -> RunReport:
    """Resolve the case and config from ``args``, solve and write all outputs."""

    case = resolve_case(args.case, nx=args.nx, nz=args.nz, h=args.h, tau=args.tau, steps=args.steps)
    config = solver_config(args, args.strategy, case)
    out = output_dir(args, f"{case.name}-{config.strategy.value}")
    out.mkdir(parents=True, exist_ok=True)
    iterations_path = out / "iterations.csv"
    field_path = out / "field_final.vtk"
    manifest_path = out / "manifest.json"

    manifest = RunManifest(
        invocation=list(getattr(args, "argv", None) or sys.argv),
        case={"name": case.name, "nx": case.nx, "nz": case.nz, "tau": case.tau, "steps": case.steps},
        config=config.model_dump(mode="json"),
        outputs=[str(iterations_path), str(field_path), str(manifest_path)],
    )
    manifest.write(manifest_path)

    console = console or Console()

    def _record_finish(payload: RunPayload) -> None:
        manifest.status = payload.get("status")
        manifest.summary = payload.get("summary")
        manifest.total_iterations = payload.get("total_iterations")

    with console.status(f"{case.name} [{config.strategy.value}]") as status:

        def _show_iteration(payload: IterationPayload) -> None:
            status.update(
                f"{payload.get('case')} step {payload.get('step')} it {payload.get('iteration')} "
                f"{payload.get('scheme')}: η_lin={payload.get('eta_lin', float('nan')):.3e}"
            )

        handlers = {
            EventTopic.ITERATION_COMPLETED: _show_iteration,
            EventTopic.STEP_COMPLETED: _log_step,
            EventTopic.RUN_FINISHED: _record_finish,
        }
        with subscribed(handlers):
            report = run_case(case, config)

    write_iterations_csv(iterations_path, report.records, timings=config.timings)
    write_vtk(field_path, report.mesh, report.psi, report.model, title=f"{case.name} {config.strategy.value}")

    manifest.finished_at = _now()
    manifest.bound_violations = report.bound_violations
    manifest.write(manifest_path)

    console.print(report.summary(), markup=False, highlight=False)
    return report


def cmd_run(args: argparse.Namespace) -> int:
    report = execute_run(args)
    return int(ExitCode.CONVERGED if report.converged else ExitCode.DIVERGED)


__all__ = ["RunManifest", "register", "execute_run", "cmd_run"]

"""Argument helpers shared by the run and sweep commands."""
from __future__ import annotations

import argparse
import math
from enum import IntEnum
from pathlib import Path
from typing import Any, Dict, Optional

from config.settings import Settings
from hydroswitch.core.services.cases import CaseSpec, builtin_cases, load_case_file
from hydroswitch.core.services.driver import SolverConfig, Strategy


class ExitCode(IntEnum):
    CONVERGED = 0
    BAD_INPUT = 1
    DIVERGED = 2


class UsageError(ValueError):
    """Raised instead of exiting when the command line cannot be parsed."""


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def add_case_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--case", default="case1", help="Builtin case (case1, case2, case3, mms) or a case file")
    parser.add_argument("--nx", type=int, default=None, help="Cells in x")
    parser.add_argument("--nz", type=int, default=None, help="Cells in z (default keeps cells square)")
    parser.add_argument("--h", type=float, default=None, help="Element diameter; sets nx for square cells")
    parser.add_argument("--tau", type=float, default=None, help="Time step size")
    parser.add_argument("--steps", type=int, default=None, help="Number of time steps")


def add_solver_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--L", dest="L", default=None, help="L-scheme parameter: a number, L1 or L2 (default L1)")
    parser.add_argument("--M", dest="M", type=float, default=None, help="Modified L-scheme weight")
    parser.add_argument("--ctol", type=float, default=None, help="Switching tolerance C_tol (> 1)")
    parser.add_argument("--stop-tol", dest="stop_tol", type=float, default=None, help="Stopping tolerance on η_lin")
    parser.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    parser.add_argument("--epsilon-deg", dest="epsilon_deg", type=float, default=None, help="Degeneracy threshold ε")
    parser.add_argument("--eqflux", action="store_true", help="Use equilibrated fluxes on the degenerate set")
    parser.add_argument("--solver", choices=("direct", "iterative"), default=None, help="Linear solver")
    parser.add_argument("--no-timings", dest="no_timings", action="store_true", help="Leave wall_ms blank")


def add_output_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", default=None, help="Output directory")
    parser.add_argument("--log-level", dest="log_level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug output from the solver loggers")


def base_case(name: str) -> CaseSpec:
    column = Settings.CASE2_PARAMETER_COLUMN
    cases = builtin_cases(case2_parameter_column=column)
    if name in cases:
        return cases[name]
    path = Path(name)
    if path.is_file():
        return load_case_file(path, case2_parameter_column=column)
    raise ValueError(f"unknown case '{name}' (builtin: {', '.join(cases)}; or pass a case file)")


def resolve_case(
    name: str,
    *,
    nx: Optional[int] = None,
    nz: Optional[int] = None,
    h: Optional[float] = None,
    tau: Optional[float] = None,
    steps: Optional[int] = None,
) -> CaseSpec:
    """Case with command-line overrides; a lone ``nx`` keeps the aspect ratio of the cells."""

    case = base_case(name)
    x0, z0, x1, z1 = case.rect
    width, height = x1 - x0, z1 - z0
    if h is not None:
        if h <= 0.0:
            raise ValueError(f"h must be positive, got {h}")
        if nx is not None:
            raise ValueError("pass either --h or --nx, not both")
        nx = max(1, round(math.sqrt(2.0) * width / h))
    overrides: Dict[str, Any] = {}
    if nx is not None:
        overrides["nx"] = nx
        overrides["nz"] = nz if nz is not None else max(1, round(nx * height / width))
    elif nz is not None:
        overrides["nz"] = nz
    if tau is not None:
        overrides["tau"] = tau
    if steps is not None:
        overrides["steps"] = steps
    return case.with_overrides(**overrides) if overrides else case


def resolve_L(value: Optional[str], case: CaseSpec) -> Optional[float]:
    if value is None:
        return None
    key = str(value).strip()
    if key.upper() == "L1":
        return case.L1
    if key.upper() == "L2":
        return case.L2
    try:
        return float(key)
    except ValueError as exc:
        raise ValueError(f"--L expects a number, L1 or L2, got '{value}'") from exc


def solver_config(args: argparse.Namespace, strategy: Strategy | str, case: CaseSpec) -> SolverConfig:
    return SolverConfig.from_settings(
        strategy=Strategy(strategy),
        L=resolve_L(getattr(args, "L", None), case),
        M=getattr(args, "M", None),
        c_tol=getattr(args, "ctol", None),
        stop_tol=getattr(args, "stop_tol", None),
        max_iters=getattr(args, "max_iters", None),
        epsilon_deg=getattr(args, "epsilon_deg", None),
        eqflux=bool(getattr(args, "eqflux", False)),
        linear_solver=getattr(args, "solver", None),
        timings=not getattr(args, "no_timings", False),
    )


def output_dir(args: argparse.Namespace, default_name: str) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    return Path(Settings.OUTPUT_DIR) / default_name


__all__ = [
    "ExitCode",
    "UsageError",
    "ArgumentParser",
    "add_case_arguments",
    "add_solver_arguments",
    "add_output_arguments",
    "base_case",
    "resolve_case",
    "resolve_L",
    "solver_config",
    "output_dir",
]

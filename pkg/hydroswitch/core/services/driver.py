"""Backward-Euler time loop with adaptive L-scheme/Newton switching and L-adaptivity."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from hydroswitch._compat import StrEnum
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field

from hydroswitch.core.constitutive import SoilModel
from hydroswitch.core.eqflux import EquilibratedFluxSolver, compute_equilibrated_flux
from hydroswitch.core.estimate import (
    SwitchEstimate,
    default_epsilon,
    degenerate_elements,
    effectivity_index,
    eta_L_to_L,
    eta_L_to_N,
    eta_N_to_L,
)
from hydroswitch.core.events import EventTopic, emit_event
from hydroswitch.core.fem import quadrature_points
from hydroswitch.core.linearize import (
    IterateState,
    LinearizationProblem,
    SchemeKind,
    generic_step,
)
from hydroswitch.core.mesh import Mesh, build_structured
from hydroswitch.core.services.cases import CaseSpec
from utils.logger import get_logger


logger = get_logger(__name__)

C_LL = np.sqrt(2.0)
_BOUND_SLACK = 1e-8


class Strategy(StrEnum):
    L = "l"
    NEWTON = "newton"
    LN = "ln"
    LADAPT = "ladapt"
    LN_ADAPT = "ln-adapt"
    PICARD = "picard"
    MODIFIED_PICARD = "mpicard"
    JAEGER_KACUR = "jk"
    MODIFIED_L = "ml"

    @property
    def switches(self) -> bool:
        return self in (Strategy.LN, Strategy.LN_ADAPT)

    @property
    def adapts_L(self) -> bool:
        return self in (Strategy.LADAPT, Strategy.LN_ADAPT)


class SolverConfig(BaseModel):
    """Iteration controls; ``L`` defaults to the case's L1 for the fixed-L strategies."""

    strategy: Strategy = Strategy.LN
    L: Optional[float] = Field(None, gt=0.0)
    M: float = Field(1.0, gt=0.0)
    c_tol: float = Field(1.5, gt=1.0)
    stop_tol: float = Field(1e-7, gt=0.0)
    max_iters: int = Field(500, ge=1)
    epsilon_deg: Optional[float] = Field(None, gt=0.0)
    epsilon_factor: float = Field(1e-4, gt=0.0)
    divergence_factor: float = Field(1e8, gt=1.0)
    eqflux: bool = False
    linear_solver: Literal["direct", "iterative"] = "direct"
    linear_rtol: float = Field(1e-12, gt=0.0, lt=1.0)
    timings: bool = True

    model_config = ConfigDict(frozen=True, extra="forbid")

    @classmethod
    def from_settings(cls, **overrides: object) -> "SolverConfig":
        """Defaults from ``config.settings`` with explicit overrides on top (``None`` ignored)."""

        from config.settings import Settings

        base = {
            "c_tol": Settings.C_TOL,
            "stop_tol": Settings.STOP_TOL,
            "max_iters": Settings.MAX_ITERS,
            "epsilon_factor": Settings.EPSILON_DEG_FACTOR,
            "divergence_factor": Settings.DIVERGENCE_FACTOR,
            "linear_solver": Settings.LINEAR_SOLVER,
            "linear_rtol": Settings.LINEAR_RTOL,
        }
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls.model_validate(base)


class RunStatus(StrEnum):
    CONVERGED = "converged"
    DIVERGED = "diverged"


@dataclass(slots=True)
class IterationRecord:
    step: int
    iteration: int
    scheme: str
    eta_lin: float
    eta_LN: Optional[float] = None
    eta_NL: Optional[float] = None
    eta_LL: Optional[float] = None
    C_N: Optional[float] = None
    eff_index: Optional[float] = None
    wall_ms: Optional[float] = None
    L: Optional[float] = None
    degenerate_fraction: float = 0.0
    bound_ok: Optional[bool] = None

    @property
    def is_newton(self) -> bool:
        return self.scheme == "N"


@dataclass(slots=True)
class StepReport:
    step: int
    time: float
    records: List[IterationRecord] = field(default_factory=list)
    converged: bool = False
    reason: str = ""
    wall_ms: float = 0.0

    @property
    def newton_iterations(self) -> int:
        return sum(1 for r in self.records if r.is_newton)

    @property
    def l_iterations(self) -> int:
        return len(self.records) - self.newton_iterations


@dataclass(slots=True)
class RunReport:
    case: str
    strategy: Strategy
    status: RunStatus
    steps: List[StepReport]
    mesh: Mesh
    model: SoilModel
    psi: NDArray[np.float64]
    failed_step: Optional[int] = None
    wall_ms: float = 0.0

    @property
    def records(self) -> List[IterationRecord]:
        return [r for s in self.steps for r in s.records]

    @property
    def total_iterations(self) -> int:
        return sum(len(s.records) for s in self.steps)

    @property
    def newton_iterations(self) -> int:
        return sum(s.newton_iterations for s in self.steps)

    @property
    def l_iterations(self) -> int:
        return sum(s.l_iterations for s in self.steps)

    @property
    def bound_violations(self) -> int:
        return sum(1 for r in self.records if r.bound_ok is False)

    @property
    def converged(self) -> bool:
        return self.status is RunStatus.CONVERGED

    def summary(self) -> str:
        text = f"{self.total_iterations} iterations"
        if self.strategy.switches:
            text += f" ({self.l_iterations}/{self.newton_iterations})"
        if not self.converged:
            text += f" [diverged at step {self.failed_step}]"
        return text


def switching_decision(
    current: Literal["L", "N"],
    c_n: float,
    eta_LN: Optional[float],
    eta_NL: Optional[float],
    eta_lin: float,
    c_tol: float,
) -> Literal["L", "N"]:
    """Scheme for the next iteration of the L/N switching loop."""

    if current == "L":
        if not c_n < 2.0:
            return "L"
        if eta_LN is not None and eta_LN <= c_tol * eta_lin:
            return "N"
        return "L"
    if not c_n < 2.0 or eta_NL is None or eta_NL > eta_lin:
        return "L"
    return "N"


def l_adaptive_update(
    L: float,
    L_m: float,
    L_M: float,
    history: Sequence[Tuple[float, float]],
) -> Tuple[float, float]:
    """New (L, L_m) from the (η_{L→L}, η_lin) history, most recent last."""

    if not history:
        return L, L_m
    eta_ll, eta_lin = history[-1]
    if eta_ll > eta_lin:
        return min(C_LL * L, L_M), L
    if len(history) >= 3 and all(ll > 0.8 * lin for ll, lin in history[-3:]):
        return max(0.9 * L, 1.1 * L_m), L_m
    return L, L_m


@dataclass
class _RunContext:
    case: CaseSpec
    config: SolverConfig
    mesh: Mesh
    model: SoilModel
    epsilon: float
    L_fixed: float
    L_M: float
    flux_solver: Optional[EquilibratedFluxSolver] = None


def _initial_scheme(ctx: _RunContext) -> SchemeKind:
    strategy = ctx.config.strategy
    if strategy is Strategy.NEWTON:
        return SchemeKind.newton()
    if strategy.adapts_L:
        return SchemeKind.l_scheme(ctx.L_M / 8.0)
    if strategy is Strategy.PICARD:
        return SchemeKind.picard()
    if strategy is Strategy.MODIFIED_PICARD:
        return SchemeKind.modified_picard()
    if strategy is Strategy.JAEGER_KACUR:
        return SchemeKind.jaeger_kacur()
    if strategy is Strategy.MODIFIED_L:
        return SchemeKind.modified_l(ctx.config.M)
    return SchemeKind.l_scheme(ctx.L_fixed)


def _flux_at_quadrature(
    ctx: _RunContext,
    kind: Literal["L", "N"],
    state_i: IterateState,
    state_im1: IterateState,
    L: Optional[float],
) -> Optional[NDArray[np.float64]]:
    if ctx.flux_solver is None:
        return None
    deg = degenerate_elements(state_i, ctx.epsilon)
    if deg.size == 0:
        return None
    sigma = compute_equilibrated_flux(kind, state_i, state_im1, state_i.problem.tau, L, deg, ctx.flux_solver)
    return sigma.evaluate(state_i.problem.rule)


def _estimates(
    ctx: _RunContext,
    scheme: SchemeKind,
    state_i: IterateState,
    state_im1: IterateState,
) -> Tuple[Optional[SwitchEstimate], Optional[SwitchEstimate], Optional[SwitchEstimate]]:
    """(η_{L→N}, η_{N→L}, η_{L→L}) applicable after an iteration of ``scheme``."""

    if scheme.is_l_scheme:
        sigma = _flux_at_quadrature(ctx, "L", state_i, state_im1, scheme.L)
        ln = eta_L_to_N(state_i, state_im1, scheme.L, ctx.epsilon, sigma)  # type: ignore[arg-type]
        ll = eta_L_to_L(state_i, state_im1, scheme.L)  # type: ignore[arg-type]
        return ln, None, ll
    if scheme.is_newton:
        sigma = _flux_at_quadrature(ctx, "N", state_i, state_im1, None)
        return None, eta_N_to_L(state_i, state_im1, ctx.epsilon, sigma), None
    return None, None, None


def _value(estimate: Optional[SwitchEstimate]) -> Optional[float]:
    return None if estimate is None else estimate.value


def _guaranteed(estimate: Optional[SwitchEstimate], flux_used: bool) -> bool:
    return (
        estimate is not None
        and estimate.available
        and np.isfinite(estimate.value)
        and (estimate.degenerate_fraction == 0.0 or flux_used)
    )


def solve_time_step(
    problem: LinearizationProblem,
    ctx: _RunContext,
    step: int,
) -> Tuple[NDArray[np.float64], StepReport]:
    """Iterate one time level to the stopping tolerance or flag divergence."""

    config = ctx.config
    report = StepReport(step=step, time=step * problem.tau)
    started = time.perf_counter()
    prev = problem.state(problem.initial_iterate())
    scheme = _initial_scheme(ctx)
    L_m = ctx.L_M / 8.0
    ll_history: List[Tuple[float, float, float]] = []
    last: Optional[Tuple[SchemeKind, Optional[SwitchEstimate], Optional[SwitchEstimate], Optional[SwitchEstimate]]] = None
    first_eta: Optional[float] = None

    for iteration in range(1, config.max_iters + 1):
        t0 = time.perf_counter()
        result = generic_step(problem, prev, scheme)
        if not result.ok:
            report.reason = f"{scheme} iteration {iteration}: {result.status.value}"
            break
        state = problem.state(result.iterate.values)
        eta = result.eta_lin
        ln, nl, ll = _estimates(ctx, scheme, state, prev)
        primary = ln if ln is not None else nl
        wall_ms = (time.perf_counter() - t0) * 1e3

        record = IterationRecord(
            step=step,
            iteration=iteration,
            scheme=scheme.name.value,
            eta_lin=eta,
            eta_LN=_value(ln),
            eta_NL=_value(nl),
            eta_LL=_value(ll),
            C_N=primary.c_n if primary is not None else None,
            wall_ms=wall_ms if config.timings else None,
            L=scheme.L,
            degenerate_fraction=primary.degenerate_fraction if primary is not None else 0.0,
        )

        if last is not None:
            prev_scheme, prev_ln, prev_nl, prev_ll = last
            flux_used = ctx.flux_solver is not None
            if scheme.is_newton:
                predictor = prev_ln if prev_scheme.is_l_scheme else prev_nl if prev_scheme.is_newton else None
                if predictor is not None and predictor.available and np.isfinite(predictor.value) and eta > 0.0:
                    record.eff_index = effectivity_index(predictor.value, eta)
                if _guaranteed(predictor, flux_used):
                    record.bound_ok = eta <= predictor.value * (1.0 + _BOUND_SLACK)  # type: ignore[union-attr]
            elif scheme.is_l_scheme and prev_scheme.is_l_scheme and prev_scheme.L == scheme.L and prev_ll is not None:
                record.bound_ok = eta <= prev_ll.value * (1.0 + _BOUND_SLACK)
            if record.bound_ok is False:
                logger.warning(
                    f"⚠️ Step {step} iteration {iteration}: η_lin={eta:.6e} exceeds the predicted bound"
                )

        report.records.append(record)
        emit_event(
            EventTopic.ITERATION_COMPLETED,
            {"case": ctx.case.name, "step": step, "iteration": iteration, "scheme": record.scheme, "eta_lin": eta, "L": scheme.L},
        )
        logger.debug(
            f"step {step} it {iteration} {scheme}: η_lin={eta:.4e}"
            + (f" η_LN={ln.value:.4e} C_N={ln.c_n:.3f}" if ln is not None else "")
            + (f" η_NL={nl.value:.4e}" if nl is not None else "")
        )

        if first_eta is None:
            first_eta = eta
        if not np.isfinite(eta) or (first_eta > 0.0 and eta > config.divergence_factor * first_eta):
            report.reason = f"{scheme} iteration {iteration}: η_lin blew up ({eta:.3e})"
            break
        if eta < config.stop_tol:
            report.converged = True
            prev = state
            break

        last = (scheme, ln, nl, ll)
        scheme = _next_scheme(ctx, scheme, record, ln, nl, ll, ll_history, L_m)
        if ll_history:
            L_m = ll_history[-1][2]
        prev = state
    else:
        report.reason = f"no convergence within {config.max_iters} iterations"

    report.wall_ms = (time.perf_counter() - started) * 1e3
    return prev.psi, report


def _next_scheme(
    ctx: _RunContext,
    scheme: SchemeKind,
    record: IterationRecord,
    ln: Optional[SwitchEstimate],
    nl: Optional[SwitchEstimate],
    ll: Optional[SwitchEstimate],
    ll_history: List[Tuple[float, float, float]],
    L_m: float,
) -> SchemeKind:
    config = ctx.config
    strategy = config.strategy
    if not (scheme.is_l_scheme or scheme.is_newton):
        return scheme

    next_L = scheme.L if scheme.is_l_scheme else None
    if strategy.adapts_L and scheme.is_l_scheme and ll is not None:
        pairs = [(a, b) for a, b, _ in ll_history] + [(ll.value, record.eta_lin)]
        new_L, new_L_m = l_adaptive_update(scheme.L, L_m, ctx.L_M, pairs)  # type: ignore[arg-type]
        ll_history.append((ll.value, record.eta_lin, new_L_m))
        next_L = new_L

    if strategy.switches:
        current: Literal["L", "N"] = "N" if scheme.is_newton else "L"
        primary = ln if ln is not None else nl
        c_n = primary.c_n if primary is not None else float("inf")
        decision = switching_decision(current, c_n, _value(ln), _value(nl), record.eta_lin, config.c_tol)
        if decision == "N":
            return SchemeKind.newton()
        if next_L is None:
            next_L = _resume_L(ctx, ll_history)
        return SchemeKind.l_scheme(next_L)

    if scheme.is_l_scheme:
        return SchemeKind.l_scheme(next_L)  # type: ignore[arg-type]
    return scheme


def _resume_L(ctx: _RunContext, ll_history: List[Tuple[float, float, float]]) -> float:
    if not ctx.config.strategy.adapts_L:
        return ctx.L_fixed
    return ctx.L_M / 8.0 if not ll_history else max(ll_history[-1][2], ctx.L_M / 8.0)


def _resolve_L(case: CaseSpec, config: SolverConfig) -> float:
    return config.L if config.L is not None else case.L1


def run_case(case: CaseSpec, config: SolverConfig) -> RunReport:
    """Run all time steps of ``case``; Dirichlet data and sources are sampled at t_n."""

    started = time.perf_counter()
    mesh = build_structured(case.nx, case.nz, case.rect)
    model = case.build_model()
    L_theta = model.L_theta
    epsilon = config.epsilon_deg if config.epsilon_deg is not None else default_epsilon(L_theta, config.epsilon_factor)
    flux_solver = None
    if config.eqflux:
        free_edges = case.dirichlet_edges(mesh)
        flux_solver = EquilibratedFluxSolver(
            mesh,
            model.saturated_conductivity,
            free_boundary_edges=free_edges if free_edges.size else None,
        )
    ctx = _RunContext(
        case=case,
        config=config,
        mesh=mesh,
        model=model,
        epsilon=epsilon,
        L_fixed=_resolve_L(case, config),
        L_M=L_theta,
    )
    ctx.flux_solver = flux_solver

    logger.info(
        f"▶️ {case.name}: {case.nx}x{case.nz} cells ({mesh.n_vertices} vertices, h={mesh.h:.4g}), "
        f"τ={case.tau:.6g}, {case.steps} step(s), strategy={config.strategy.value}"
    )
    logger.info(
        f"L_θ={L_theta:.6g}, ε={epsilon:.3e}, C_N from the discrete Newton form, "
        f"equilibrated flux {'on' if flux_solver else 'off'}"
    )
    for note in case.notes:
        logger.info(f"ℹ️ {note}")
    if abs(L_theta - case.L2) > 1e-2 * case.L2:
        logger.warning(f"⚠️ L2={case.L2:.6g} differs from the computed sup θ′={L_theta:.6g}")

    x, z = mesh.vertices[:, 0], mesh.vertices[:, 1]
    psi = np.broadcast_to(np.asarray(case.initial(x, z), dtype=float), (mesh.n_vertices,)).copy()
    qp = quadrature_points(mesh)
    steps: List[StepReport] = []
    status = RunStatus.CONVERGED
    failed_step: Optional[int] = None

    for n in range(1, case.steps + 1):
        t = n * case.tau
        dofs, values = case.dirichlet_data(mesh, t)
        source = np.broadcast_to(
            np.asarray(case.source(t, qp[..., 0], qp[..., 1]), dtype=float), qp.shape[:2]
        ).copy()
        problem = LinearizationProblem(
            mesh=mesh,
            model=model,
            tau=case.tau,
            psi_old=psi,
            source=source,
            dirichlet_dofs=dofs,
            dirichlet_values=values,
            solver=config.linear_solver,
            linear_rtol=config.linear_rtol,
        )
        psi_new, report = solve_time_step(problem, ctx, n)
        steps.append(report)
        emit_event(
            EventTopic.STEP_COMPLETED,
            {
                "case": case.name,
                "step": n,
                "time": t,
                "l_iterations": report.l_iterations,
                "newton_iterations": report.newton_iterations,
                "converged": report.converged,
            },
        )
        if not report.converged:
            status = RunStatus.DIVERGED
            failed_step = n
            logger.warning(f"❌ {case.name} step {n} diverged: {report.reason}")
            break
        psi = psi_new
        logger.debug(
            f"step {n}/{case.steps} t={t:.6g}: {len(report.records)} iterations "
            f"({report.l_iterations}/{report.newton_iterations})"
        )

    run = RunReport(
        case=case.name,
        strategy=config.strategy,
        status=status,
        steps=steps,
        mesh=mesh,
        model=model,
        psi=psi,
        failed_step=failed_step,
        wall_ms=(time.perf_counter() - started) * 1e3 if config.timings else 0.0,
    )
    if run.bound_violations:
        logger.warning(f"⚠️ {run.bound_violations} estimator bound violation(s) recorded")
    emit_event(
        EventTopic.RUN_FINISHED,
        {
            "case": case.name,
            "strategy": config.strategy.value,
            "status": status.value,
            "total_iterations": run.total_iterations,
            "summary": run.summary(),
        },
    )
    logger.info(f"🏁 {case.name} [{config.strategy.value}]: {run.summary()}")
    return run


__all__ = [
    "Strategy",
    "SolverConfig",
    "RunStatus",
    "IterationRecord",
    "StepReport",
    "RunReport",
    "switching_decision",
    "l_adaptive_update",
    "solve_time_step",
    "run_case",
]

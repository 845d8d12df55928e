"""One iteration of each linearisation scheme, in increment form, with its η_lin."""
from __future__ import annotations

from dataclasses import dataclass, field
from hydroswitch._compat import StrEnum
from functools import cached_property
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from hydroswitch.core.constitutive import SoilModel
from hydroswitch.core.fem import (
    DEFAULT_RULE,
    GRAVITY,
    DiscreteField,
    LinearSolverError,
    QuadratureRule,
    SolverMethod,
    apply_dirichlet,
    assemble_convection,
    assemble_rhs,
    assemble_weighted_mass,
    assemble_weighted_stiffness,
    element_gradients,
    energy_norm,
    interpolate,
    solve_linear,
)
from hydroswitch.core.mesh import Mesh
from utils.logger import get_logger


logger = get_logger(__name__)

_JK_GRID_POINTS = 400
_JK_CHUNK = 4096
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class SchemeName(StrEnum):
    L_SCHEME = "L"
    NEWTON = "N"
    PICARD = "P"
    MODIFIED_PICARD = "MP"
    JAEGER_KACUR = "JK"
    MODIFIED_L = "ML"


@dataclass(frozen=True)
class SchemeKind:
    """A member of the weighted family; ``name`` doubles as the CSV scheme tag."""

    name: SchemeName
    L: Optional[float] = None
    M: Optional[float] = None

    def __post_init__(self) -> None:
        if self.name is SchemeName.L_SCHEME and (self.L is None or self.L <= 0.0):
            raise ValueError(f"L-scheme needs L > 0, got {self.L}")
        if self.name is SchemeName.MODIFIED_L and (self.M is None or self.M <= 0.0):
            raise ValueError(f"modified L-scheme needs M > 0, got {self.M}")

    @classmethod
    def l_scheme(cls, L: float) -> "SchemeKind":
        return cls(SchemeName.L_SCHEME, L=float(L))

    @classmethod
    def newton(cls) -> "SchemeKind":
        return cls(SchemeName.NEWTON)

    @classmethod
    def picard(cls) -> "SchemeKind":
        return cls(SchemeName.PICARD)

    @classmethod
    def modified_picard(cls) -> "SchemeKind":
        return cls(SchemeName.MODIFIED_PICARD)

    @classmethod
    def jaeger_kacur(cls) -> "SchemeKind":
        return cls(SchemeName.JAEGER_KACUR)

    @classmethod
    def modified_l(cls, M: float) -> "SchemeKind":
        return cls(SchemeName.MODIFIED_L, M=float(M))

    @property
    def is_newton(self) -> bool:
        return self.name is SchemeName.NEWTON

    @property
    def is_l_scheme(self) -> bool:
        return self.name is SchemeName.L_SCHEME

    def __str__(self) -> str:
        if self.is_l_scheme:
            return f"L-scheme(L={self.L:.6g})"
        if self.name is SchemeName.MODIFIED_L:
            return f"modified-L(M={self.M:.6g})"
        return self.name.name.replace("_", "-").lower()


class StepStatus(StrEnum):
    OK = "ok"
    SOLVER_FAILURE = "solver_failure"
    NON_FINITE = "non_finite"


@dataclass(frozen=True, eq=False)
class LinearizationProblem:
    """Data of one backward-Euler step: ψ^{n−1}, f^n and the Dirichlet values at t_n."""

    mesh: Mesh
    model: SoilModel
    tau: float
    psi_old: NDArray[np.float64]
    source: NDArray[np.float64]
    dirichlet_dofs: NDArray[np.int64]
    dirichlet_values: NDArray[np.float64]
    rule: QuadratureRule = field(default=DEFAULT_RULE)
    solver: SolverMethod = "direct"
    linear_rtol: float = 1e-12

    def __post_init__(self) -> None:
        if self.tau <= 0.0:
            raise ValueError(f"time step must be positive, got {self.tau}")
        if self.dirichlet_dofs.shape != self.dirichlet_values.shape:
            raise ValueError("Dirichlet dofs and values differ in length")

    @cached_property
    def theta_old(self) -> NDArray[np.float64]:
        return np.asarray(self.model.water_content(interpolate(self.mesh, self.psi_old, self.rule)))

    def initial_iterate(self) -> NDArray[np.float64]:
        """ψ^{n,0}: the previous time level with the new Dirichlet values imposed."""
        psi = np.array(self.psi_old, dtype=float)
        psi[self.dirichlet_dofs] = self.dirichlet_values
        return psi

    def state(self, psi: NDArray[np.float64]) -> "IterateState":
        return IterateState(self, np.asarray(psi, dtype=float))


class IterateState:
    """Coefficient fields of one iterate at the quadrature points, computed lazily."""

    def __init__(self, problem: LinearizationProblem, psi: NDArray[np.float64]) -> None:
        self.problem = problem
        self.psi = psi

    @cached_property
    def psi_q(self) -> NDArray[np.float64]:
        return interpolate(self.problem.mesh, self.psi, self.problem.rule)

    @cached_property
    def grad(self) -> NDArray[np.float64]:
        return element_gradients(self.problem.mesh, self.psi)

    @cached_property
    def head_grad(self) -> NDArray[np.float64]:
        """∇(ψ + z) per element."""
        return self.grad + GRAVITY

    @cached_property
    def theta(self) -> NDArray[np.float64]:
        return np.asarray(self.problem.model.water_content(self.psi_q))

    @cached_property
    def dtheta(self) -> NDArray[np.float64]:
        return np.asarray(self.problem.model.water_content_derivative(self.psi_q))

    @cached_property
    def conductivity(self) -> NDArray[np.float64]:
        return np.asarray(self.problem.model.conductivity(self.psi_q))

    @cached_property
    def dconductivity(self) -> NDArray[np.float64]:
        return np.asarray(self.problem.model.conductivity_derivative(self.psi_q))

    @cached_property
    def dtheta_vertices(self) -> NDArray[np.float64]:
        return np.asarray(self.problem.model.water_content_derivative(self.psi))

    def field(self) -> DiscreteField:
        return DiscreteField(self.problem.mesh, self.psi)


@dataclass(slots=True)
class StepResult:
    iterate: DiscreteField
    increment: NDArray[np.float64]
    eta_lin: float
    status: StepStatus
    scheme: SchemeKind

    @property
    def ok(self) -> bool:
        return self.status is StepStatus.OK


def jaeger_kacur_weight(model: SoilModel, psi: NDArray[np.float64]) -> NDArray[np.float64]:
    """sup_ξ (θ(ξ) − θ(ψ))/(ξ − ψ) pointwise over the model's working range.

    A 400-point ξ grid locates the maximiser, a vectorised golden-section search
    refines it inside the neighbouring grid cells.
    """

    psi = np.asarray(psi, dtype=float)
    flat = psi.ravel()
    lo, hi = model.working_range
    grid = np.linspace(lo, hi, _JK_GRID_POINTS)
    theta_grid = np.asarray(model.water_content(grid))
    theta_psi = np.asarray(model.water_content(flat))
    slope = np.asarray(model.water_content_derivative(flat))

    def quotient(xi: NDArray[np.float64], p: NDArray[np.float64], tp: NDArray[np.float64], sp: NDArray[np.float64]):
        dx = xi - p
        close = np.abs(dx) < 1e-10
        with np.errstate(divide="ignore", invalid="ignore"):
            q = (np.asarray(model.water_content(xi)) - tp) / np.where(close, 1.0, dx)
        return np.where(close, sp, q)

    result = np.empty_like(flat)
    for start in range(0, flat.size, _JK_CHUNK):
        stop = min(start + _JK_CHUNK, flat.size)
        p = flat[start:stop, None]
        tp = theta_psi[start:stop, None]
        sp = slope[start:stop, None]
        dx = grid[None, :] - p
        close = np.abs(dx) < 1e-10
        with np.errstate(divide="ignore", invalid="ignore"):
            q = (theta_grid[None, :] - tp) / np.where(close, 1.0, dx)
        q = np.where(close, sp, q)
        k = np.argmax(q, axis=1)
        best = q[np.arange(q.shape[0]), k]

        a = grid[np.maximum(k - 1, 0)]
        b = grid[np.minimum(k + 1, grid.size - 1)]
        p1, tp1, sp1 = p[:, 0], tp[:, 0], sp[:, 0]
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc = quotient(c, p1, tp1, sp1)
        fd = quotient(d, p1, tp1, sp1)
        for _ in range(40):
            left = fc > fd
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            c_new = b - _GOLDEN * (b - a)
            d_new = a + _GOLDEN * (b - a)
            fc, fd = quotient(c_new, p1, tp1, sp1), quotient(d_new, p1, tp1, sp1)
            c, d = c_new, d_new
        refined = np.maximum(fc, fd)
        result[start:stop] = np.maximum(np.maximum(best, refined), sp1)
    return result.reshape(psi.shape)


def scheme_weight(scheme: SchemeKind, state: IterateState) -> NDArray[np.float64] | float:
    """Linearisation weight at the quadrature points of the previous iterate."""

    name = scheme.name
    if name is SchemeName.L_SCHEME:
        return float(scheme.L)  # type: ignore[arg-type]
    if name in (SchemeName.NEWTON, SchemeName.MODIFIED_PICARD):
        return state.dtheta
    if name is SchemeName.PICARD:
        return 0.0
    if name is SchemeName.JAEGER_KACUR:
        return jaeger_kacur_weight(state.problem.model, state.psi_q)
    return state.dtheta + float(scheme.M) * state.problem.tau  # type: ignore[arg-type]


def iteration_norm(xi: NDArray[np.float64], scheme: SchemeKind, state: IterateState) -> float:
    """Energy norm of ``xi`` for ``scheme`` weighted by the iterate ``state``."""

    problem = state.problem
    return energy_norm(
        problem.mesh,
        xi,
        scheme_weight(scheme, state),
        state.conductivity,
        problem.tau,
        problem.rule,
    )


def generic_step(problem: LinearizationProblem, prev: IterateState, scheme: SchemeKind) -> StepResult:
    """Solve for the increment δψ of ``scheme`` from the iterate ``prev``.

    Every scheme shares the residual of the nonlinear step; only the mass
    weight (and, for Newton, the convection term) differ.
    """

    mesh, tau, rule = problem.mesh, problem.tau, problem.rule
    weight = scheme_weight(scheme, prev)
    matrix = assemble_weighted_mass(mesh, weight, rule) + assemble_weighted_stiffness(
        mesh, prev.conductivity, tau, rule
    )
    if scheme.is_newton:
        b = prev.dconductivity[:, :, None] * prev.head_grad[:, None, :]
        matrix = matrix + assemble_convection(mesh, b, tau, rule)
    rhs = assemble_rhs(
        mesh,
        problem.source,
        tau,
        problem.theta_old,
        prev.theta,
        prev.conductivity,
        psi_prev_iter=prev.psi,
        rule=rule,
    )
    dofs = problem.dirichlet_dofs
    matrix, rhs = apply_dirichlet(matrix, rhs, dofs, np.zeros(dofs.size))

    try:
        increment = solve_linear(matrix, rhs, method=problem.solver, rtol=problem.linear_rtol)
    except LinearSolverError as exc:
        logger.debug(f"{scheme} solve failed: {exc}")
        return StepResult(prev.field(), np.zeros_like(prev.psi), float("nan"), StepStatus.SOLVER_FAILURE, scheme)

    psi_new = prev.psi + increment
    if not np.all(np.isfinite(psi_new)):
        return StepResult(prev.field(), increment, float("nan"), StepStatus.NON_FINITE, scheme)
    eta = energy_norm(mesh, increment, weight, prev.conductivity, tau, rule)
    status = StepStatus.OK if np.isfinite(eta) else StepStatus.NON_FINITE
    return StepResult(DiscreteField(mesh, psi_new), increment, eta, status, scheme)


def l_scheme_step(problem: LinearizationProblem, prev: IterateState, L: float) -> StepResult:
    return generic_step(problem, prev, SchemeKind.l_scheme(L))


def newton_step(problem: LinearizationProblem, prev: IterateState) -> StepResult:
    return generic_step(problem, prev, SchemeKind.newton())


def nonlinear_residual(problem: LinearizationProblem, psi: NDArray[np.float64]) -> NDArray[np.float64]:
    """Residual of the fully discrete step at ``psi`` with Dirichlet rows zeroed."""

    state = problem.state(psi)
    r = assemble_rhs(
        problem.mesh,
        problem.source,
        problem.tau,
        problem.theta_old,
        state.theta,
        state.conductivity,
        psi_prev_iter=psi,
        rule=problem.rule,
    )
    r[problem.dirichlet_dofs] = 0.0
    return r


__all__ = [
    "SchemeName",
    "SchemeKind",
    "StepStatus",
    "LinearizationProblem",
    "IterateState",
    "StepResult",
    "jaeger_kacur_weight",
    "scheme_weight",
    "iteration_norm",
    "generic_step",
    "l_scheme_step",
    "newton_step",
    "nonlinear_residual",
]

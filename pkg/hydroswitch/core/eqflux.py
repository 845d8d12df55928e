"""Lowest-order Raviart–Thomas equilibrated fluxes for the degenerate element set.

The flux minimises ‖K(1)^{−1/2} σ‖ subject to an elementwise divergence
constraint; the saddle-point matrix depends only on the mesh, so it is
factorised once and reused for every right-hand side.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.typing import ArrayLike, NDArray

from hydroswitch.core.fem import DEFAULT_RULE, LinearSolverError, QuadratureRule, quadrature_points
from hydroswitch.core.linearize import IterateState
from hydroswitch.core.mesh import Mesh
from utils.logger import get_logger


logger = get_logger(__name__)

FluxKind = Literal["L", "N"]


def _basis_scale(mesh: Mesh) -> NDArray[np.float64]:
    """s_k |e_k| / (2|T|) for every local edge, shape (n_triangles, 3)."""
    lengths = mesh.edge_lengths[mesh.triangle_edges]
    return mesh.edge_signs * lengths / (2.0 * mesh.areas[:, None])


@dataclass(frozen=True, eq=False)
class RTField:
    """RT0 field stored as the normal component on each edge in the global edge orientation."""

    mesh: Mesh
    coefficients: NDArray[np.float64]

    @classmethod
    def zeros(cls, mesh: Mesh) -> "RTField":
        return cls(mesh, np.zeros(mesh.edges.shape[0]))

    def divergence(self) -> NDArray[np.float64]:
        """Constant divergence per element."""
        mesh = self.mesh
        u = self.coefficients[mesh.triangle_edges]
        lengths = mesh.edge_lengths[mesh.triangle_edges]
        return np.einsum("tk,tk->t", mesh.edge_signs * u, lengths) / mesh.areas

    def evaluate(self, rule: QuadratureRule = DEFAULT_RULE) -> NDArray[np.float64]:
        """Values at the quadrature points, shape (n_triangles, n_points, 2)."""
        mesh = self.mesh
        x = quadrature_points(mesh, rule)
        p = mesh.vertices[mesh.triangles]
        c = _basis_scale(mesh) * self.coefficients[mesh.triangle_edges]
        return np.einsum("tk,tqkd->tqd", c, x[:, :, None, :] - p[:, None, :, :])

    def weighted_norm(self, conductivity: float, rule: QuadratureRule = DEFAULT_RULE) -> float:
        """‖K^{−1/2} σ‖ for a constant conductivity."""
        values = self.evaluate(rule)
        density = np.einsum("tqd,tqd->tq", values, values) @ rule.weights
        return float(np.sqrt(density @ self.mesh.areas / conductivity))


def project_piecewise_constant(
    mesh: Mesh,
    g: ArrayLike,
    rule: QuadratureRule = DEFAULT_RULE,
) -> NDArray[np.float64]:
    """Element means of a field given at the quadrature points."""
    values = np.broadcast_to(np.asarray(g, dtype=float), (mesh.n_triangles, rule.size))
    return values @ rule.weights


def rt0_mass_matrix(mesh: Mesh) -> sp.csr_matrix:
    """Matrix of ∫ φ_e · φ_f over the RT0 edge basis."""

    rule = DEFAULT_RULE  # exact for the quadratic integrand
    x = quadrature_points(mesh, rule)
    p = mesh.vertices[mesh.triangles]
    rel = x[:, :, None, :] - p[:, None, :, :]
    moments = np.einsum("q,tqid,tqjd->tij", rule.weights, rel, rel) * mesh.areas[:, None, None]
    scale = _basis_scale(mesh)
    local = scale[:, :, None] * scale[:, None, :] * moments
    e = mesh.triangle_edges
    rows = np.repeat(e, 3, axis=1).ravel()
    cols = np.tile(e, (1, 3)).ravel()
    n = mesh.edges.shape[0]
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def rt0_divergence_matrix(mesh: Mesh) -> sp.csr_matrix:
    """Rows give ∫_T ∇·σ = Σ_k s_k |e_k| u_k."""

    e = mesh.triangle_edges
    values = mesh.edge_signs * mesh.edge_lengths[e]
    rows = np.repeat(np.arange(mesh.n_triangles), 3)
    return sp.coo_matrix((values.ravel(), (rows, e.ravel())), shape=(mesh.n_triangles, mesh.edges.shape[0])).tocsr()


class EquilibratedFluxSolver:
    """Factorised RT0 saddle-point system for a fixed mesh.

    ``free_boundary_edges`` are the boundary edges whose normal flux is left
    free (all of ∂Ω when ``None``); other boundary edges carry zero flux. When
    no boundary edge is free one multiplier is pinned and the divergence data
    is shifted to zero mean.
    """

    def __init__(
        self,
        mesh: Mesh,
        saturated_conductivity: float,
        *,
        free_boundary_edges: Optional[ArrayLike] = None,
    ) -> None:
        if saturated_conductivity <= 0.0:
            raise ValueError(f"conductivity must be positive, got {saturated_conductivity}")
        self.mesh = mesh
        self.conductivity = float(saturated_conductivity)
        boundary = mesh.boundary_edge_ids
        free = boundary if free_boundary_edges is None else np.intersect1d(boundary, np.asarray(free_boundary_edges))
        fixed = np.setdiff1d(boundary, free)
        n_edges = mesh.edges.shape[0]
        self._unknowns = np.setdiff1d(np.arange(n_edges), fixed)
        self.pinned = free.size == 0

        mass = rt0_mass_matrix(mesh)[self._unknowns][:, self._unknowns] / self.conductivity
        div = rt0_divergence_matrix(mesh)[:, self._unknowns]
        if self.pinned:
            div = div[:-1]
        system = sp.bmat([[mass, div.T], [div, None]], format="csc")
        try:
            self._lu = spla.splu(system)
        except RuntimeError as exc:
            raise LinearSolverError(f"equilibrated flux system is singular: {exc}") from exc
        logger.debug(
            f"Factorised RT0 system: {self._unknowns.size} flux unknowns, "
            f"{div.shape[0]} constraints, {free.size} free boundary edges"
        )

    def solve(self, divergence: ArrayLike) -> RTField:
        """Flux with the prescribed constant divergence per element."""

        mesh = self.mesh
        data = np.asarray(divergence, dtype=float)
        if data.shape != (mesh.n_triangles,):
            raise ValueError(f"expected {mesh.n_triangles} element values, got shape {data.shape}")
        if not np.any(data):
            return RTField.zeros(mesh)
        g = data * mesh.areas
        if self.pinned:
            g = g - mesh.areas * (g.sum() / mesh.areas.sum())
            g = g[:-1]
        rhs = np.concatenate([np.zeros(self._unknowns.size), g])
        sol = self._lu.solve(rhs)
        if not np.all(np.isfinite(sol)):
            raise LinearSolverError("equilibrated flux solve produced non-finite values")
        coefficients = np.zeros(mesh.edges.shape[0])
        coefficients[self._unknowns] = sol[: self._unknowns.size]
        return RTField(mesh, coefficients)


def flux_residual(
    kind: FluxKind,
    state_i: IterateState,
    state_im1: IterateState,
    L: Optional[float] = None,
) -> NDArray[np.float64]:
    """Pointwise potential residual whose element means drive the flux divergence."""

    delta = state_i.psi_q - state_im1.psi_q
    jump = state_i.theta - state_im1.theta
    if kind == "L":
        if L is None or L <= 0.0:
            raise ValueError("the L-scheme flux needs L > 0")
        return L * delta - jump
    return state_im1.dtheta * delta - jump


def compute_equilibrated_flux(
    kind: FluxKind,
    state_i: IterateState,
    state_im1: IterateState,
    tau: float,
    L: Optional[float],
    deg_set: ArrayLike,
    solver: Optional[EquilibratedFluxSolver] = None,
) -> RTField:
    """σ with ∇·σ = Π₀(residual)/τ on ``deg_set`` and 0 elsewhere."""

    mesh = state_i.problem.mesh
    deg = np.asarray(deg_set, dtype=np.int64)
    if deg.size == 0:
        return RTField.zeros(mesh)
    means = project_piecewise_constant(mesh, flux_residual(kind, state_i, state_im1, L), state_i.problem.rule)
    divergence = np.zeros(mesh.n_triangles)
    divergence[deg] = means[deg] / tau
    if solver is None:
        solver = EquilibratedFluxSolver(mesh, state_i.problem.model.saturated_conductivity)
    return solver.solve(divergence)


__all__ = [
    "RTField",
    "EquilibratedFluxSolver",
    "project_piecewise_constant",
    "rt0_mass_matrix",
    "rt0_divergence_matrix",
    "flux_residual",
    "compute_equilibrated_flux",
]

"""P1 finite-element assembly, Dirichlet elimination, energy norms and linear solves."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.typing import ArrayLike, NDArray

from hydroswitch.core.mesh import Mesh
from utils.logger import get_logger


logger = get_logger(__name__)

GRAVITY = np.array([0.0, 1.0])
SolverMethod = Literal["direct", "iterative"]
_REFINEMENT_STEPS = 3


class LinearSolverError(RuntimeError):
    """Raised when a sparse solve breaks down or returns a non-finite result."""


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points and weights (summing to 1) on the reference triangle."""

    points: NDArray[np.float64]
    weights: NDArray[np.float64]
    degree: int

    @property
    def size(self) -> int:
        return int(self.weights.size)

    @classmethod
    def centroid(cls) -> "QuadratureRule":
        return cls(points=np.full((1, 3), 1.0 / 3.0), weights=np.ones(1), degree=1)

    @classmethod
    def degree2(cls) -> "QuadratureRule":
        a, b = 2.0 / 3.0, 1.0 / 6.0
        points = np.array([[a, b, b], [b, a, b], [b, b, a]])
        return cls(points=points, weights=np.full(3, 1.0 / 3.0), degree=2)

    @classmethod
    def degree5(cls) -> "QuadratureRule":
        r = np.sqrt(15.0)
        a1 = (6.0 - r) / 21.0
        a2 = (6.0 + r) / 21.0
        w1 = (155.0 - r) / 1200.0
        w2 = (155.0 + r) / 1200.0
        points = np.array(
            [
                [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
                [1.0 - 2.0 * a1, a1, a1],
                [a1, 1.0 - 2.0 * a1, a1],
                [a1, a1, 1.0 - 2.0 * a1],
                [1.0 - 2.0 * a2, a2, a2],
                [a2, 1.0 - 2.0 * a2, a2],
                [a2, a2, 1.0 - 2.0 * a2],
            ]
        )
        weights = np.array([9.0 / 40.0, w1, w1, w1, w2, w2, w2])
        return cls(points=points, weights=weights, degree=5)


DEFAULT_RULE = QuadratureRule.degree2()


@dataclass(frozen=True, eq=False)
class DiscreteField:
    """Nodal P1 coefficients on a mesh (ψ_h, an iterate, or an increment)."""

    mesh: Mesh
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        if self.values.shape != (self.mesh.n_vertices,):
            raise ValueError(f"field has shape {self.values.shape}, mesh has {self.mesh.n_vertices} vertices")

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def at_quadrature(self, rule: QuadratureRule = DEFAULT_RULE) -> NDArray[np.float64]:
        return interpolate(self.mesh, self.values, rule)

    def gradients(self) -> NDArray[np.float64]:
        return element_gradients(self.mesh, self.values)


def quadrature_points(mesh: Mesh, rule: QuadratureRule = DEFAULT_RULE) -> NDArray[np.float64]:
    """Physical quadrature points, shape (n_triangles, n_points, 2)."""
    return np.einsum("qk,tkd->tqd", rule.points, mesh.vertices[mesh.triangles])


def interpolate(mesh: Mesh, nodal: NDArray[np.float64], rule: QuadratureRule = DEFAULT_RULE) -> NDArray[np.float64]:
    """P1 interpolant of nodal values at the quadrature points, shape (n_triangles, n_points)."""
    return np.asarray(nodal, dtype=float)[mesh.triangles] @ rule.points.T


def element_gradients(mesh: Mesh, nodal: NDArray[np.float64]) -> NDArray[np.float64]:
    """Constant gradient of a P1 field per element, shape (n_triangles, 2)."""
    return np.einsum("tk,tkd->td", np.asarray(nodal, dtype=float)[mesh.triangles], mesh.gradients)


def _coefficient(value: ArrayLike, mesh: Mesh, rule: QuadratureRule) -> NDArray[np.float64]:
    arr = np.asarray(value, dtype=float)
    return np.broadcast_to(arr, (mesh.n_triangles, rule.size))


def _to_sparse(mesh: Mesh, local: NDArray[np.float64]) -> sp.csr_matrix:
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_vertices
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _load_vector(mesh: Mesh, local: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.n_vertices)


def assemble_weighted_mass(mesh: Mesh, w: ArrayLike, rule: QuadratureRule = DEFAULT_RULE) -> sp.csr_matrix:
    """Matrix of ∫ w φ_i φ_j with ``w`` given at the quadrature points (or as a constant)."""

    wq = _coefficient(w, mesh, rule)
    lam = rule.points
    local = np.einsum("q,tq,qi,qj->tij", rule.weights, wq, lam, lam) * mesh.areas[:, None, None]
    return _to_sparse(mesh, local)


def assemble_weighted_stiffness(
    mesh: Mesh,
    c: ArrayLike,
    tau: float,
    rule: QuadratureRule = DEFAULT_RULE,
) -> sp.csr_matrix:
    """Matrix of τ ∫ c ∇φ_j·∇φ_i."""

    cq = _coefficient(c, mesh, rule)
    c_mean = cq @ rule.weights
    g = mesh.gradients
    local = tau * (c_mean * mesh.areas)[:, None, None] * np.einsum("tid,tjd->tij", g, g)
    return _to_sparse(mesh, local)


def assemble_convection(
    mesh: Mesh,
    b: NDArray[np.float64],
    tau: float,
    rule: QuadratureRule = DEFAULT_RULE,
) -> sp.csr_matrix:
    """Matrix of τ ∫ (b φ_j)·∇φ_i for a vector field ``b`` of shape (n_triangles, n_points, 2)."""

    bq = np.broadcast_to(np.asarray(b, dtype=float), (mesh.n_triangles, rule.size, 2))
    # ∫ φ_j b over the element, per local j
    moments = np.einsum("q,qj,tqd->tjd", rule.weights, rule.points, bq) * mesh.areas[:, None, None]
    local = tau * np.einsum("tid,tjd->tij", mesh.gradients, moments)
    return _to_sparse(mesh, local)


def assemble_rhs(
    mesh: Mesh,
    f: ArrayLike,
    tau: float,
    theta_old: ArrayLike,
    theta_prev_iter: ArrayLike,
    c: ArrayLike,
    *,
    psi_prev_iter: NDArray[np.float64] | None = None,
    gravity: NDArray[np.float64] = GRAVITY,
    rule: QuadratureRule = DEFAULT_RULE,
) -> NDArray[np.float64]:
    """Residual vector τ(f,φ_i) − (θ^{j−1} − θ^{n−1}, φ_i) − τ(c ∇(ψ^{j−1} + z), ∇φ_i).

    Without ``psi_prev_iter`` only the gravity part of the flux is included.
    """

    fq = _coefficient(f, mesh, rule)
    dtheta = _coefficient(theta_prev_iter, mesh, rule) - _coefficient(theta_old, mesh, rule)
    cq = _coefficient(c, mesh, rule)
    source = (tau * fq - dtheta) * rule.weights
    local = (source @ rule.points) * mesh.areas[:, None]

    head = np.broadcast_to(np.asarray(gravity, dtype=float), (mesh.n_triangles, 2))
    if psi_prev_iter is not None:
        head = head + element_gradients(mesh, psi_prev_iter)
    c_mean = cq @ rule.weights
    flux = (tau * c_mean * mesh.areas)[:, None] * head
    local = local - np.einsum("tkd,td->tk", mesh.gradients, flux)
    return _load_vector(mesh, local)


def apply_dirichlet(
    matrix: sp.spmatrix,
    rhs: NDArray[np.float64],
    dofs: ArrayLike,
    values: ArrayLike,
) -> Tuple[sp.csr_matrix, NDArray[np.float64]]:
    """Eliminate rows and columns of ``dofs`` and reinsert the prescribed values."""

    dofs = np.asarray(dofs, dtype=np.int64).ravel()
    values = np.asarray(values, dtype=float).ravel()
    if values.shape != dofs.shape:
        raise ValueError(f"{dofs.size} Dirichlet dofs but {values.size} values")
    A = sp.csr_matrix(matrix)
    b = np.array(rhs, dtype=float)
    if dofs.size == 0:
        return A, b

    n = A.shape[0]
    lifted = np.zeros(n)
    lifted[dofs] = values
    b = b - A @ lifted
    mask = np.zeros(n)
    mask[dofs] = 1.0
    keep = sp.diags(1.0 - mask)
    A = (keep @ A @ keep + sp.diags(mask)).tocsr()
    b[dofs] = values
    return A, b


def energy_norm(
    mesh: Mesh,
    xi: NDArray[np.float64],
    mass_weight: ArrayLike,
    conductivity: ArrayLike,
    tau: float,
    rule: QuadratureRule = DEFAULT_RULE,
) -> float:
    """√(∫ w ξ² + τ ∫ K |∇ξ|²) with ``w`` the scheme weight (L or θ′ of the previous iterate)."""

    xq = interpolate(mesh, xi, rule)
    wq = _coefficient(mass_weight, mesh, rule)
    kq = _coefficient(conductivity, mesh, rule)
    potential = ((wq * xq * xq) @ rule.weights) @ mesh.areas
    grad = element_gradients(mesh, xi)
    flux = ((kq @ rule.weights) * np.einsum("td,td->t", grad, grad)) @ mesh.areas
    return float(np.sqrt(max(potential + tau * flux, 0.0)))


def solve_linear(
    matrix: sp.spmatrix,
    rhs: NDArray[np.float64],
    *,
    method: SolverMethod = "direct",
    rtol: float = 1e-12,
) -> NDArray[np.float64]:
    """Solve a square sparse system; breakdown raises :class:`LinearSolverError`.

    The direct path refines the SuperLU solution until the normwise backward
    error ‖Ax − b‖ / (‖A‖‖x‖ + ‖b‖) is at most ``rtol``; GMRES stops on the
    relative residual ‖Ax − b‖ / ‖b‖ ≤ ``rtol``.
    """

    A = sp.csc_matrix(matrix)
    b = np.asarray(rhs, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise ValueError(f"incompatible system: matrix {A.shape}, rhs {b.shape}")
    if not 0.0 < rtol < 1.0:
        raise ValueError(f"rtol must lie in (0, 1), got {rtol}")
    if not np.all(np.isfinite(A.data)) or not np.all(np.isfinite(b)):
        raise LinearSolverError("system contains non-finite entries")

    if method == "direct":
        x = _solve_direct(A, b, rtol)
    elif method == "iterative":
        try:
            ilu = spla.spilu(A, drop_tol=1e-6, fill_factor=20)
        except RuntimeError as exc:
            raise LinearSolverError(f"incomplete LU failed: {exc}") from exc
        precond = spla.LinearOperator(A.shape, ilu.solve)
        x, info = spla.gmres(A, b, rtol=rtol, atol=0.0, restart=200, maxiter=50, M=precond)
        if info != 0:
            raise LinearSolverError(f"GMRES did not converge (info={info})")
    else:
        raise ValueError(f"unknown linear solver method '{method}'")

    if not np.all(np.isfinite(x)):
        raise LinearSolverError("solution contains non-finite values")
    return x


def _backward_error(A: sp.csc_matrix, x: NDArray[np.float64], b: NDArray[np.float64], a_norm: float) -> float:
    scale = a_norm * np.linalg.norm(x, np.inf) + np.linalg.norm(b, np.inf)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(A @ x - b, np.inf) / scale)


def _solve_direct(A: sp.csc_matrix, b: NDArray[np.float64], rtol: float) -> NDArray[np.float64]:
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise LinearSolverError(f"sparse LU failed: {exc}") from exc
    a_norm = float(spla.norm(A, np.inf))
    x = lu.solve(b)
    for _ in range(_REFINEMENT_STEPS):
        if not np.all(np.isfinite(x)) or _backward_error(A, x, b, a_norm) <= rtol:
            break
        x = x + lu.solve(b - A @ x)
    if not np.all(np.isfinite(x)):
        raise LinearSolverError("solution contains non-finite values")
    error = _backward_error(A, x, b, a_norm)
    if error > rtol:
        raise LinearSolverError(f"backward error {error:.3e} exceeds {rtol:.1e}")
    return x


def l2_error(mesh: Mesh, nodal: NDArray[np.float64], exact: Sequence[float] | NDArray[np.float64]) -> float:
    """L² norm of (nodal − exact) using the consistent P1 mass matrix."""

    diff = np.asarray(nodal, dtype=float) - np.asarray(exact, dtype=float)
    mass = assemble_weighted_mass(mesh, 1.0)
    return float(np.sqrt(diff @ (mass @ diff)))


__all__ = [
    "GRAVITY",
    "LinearSolverError",
    "QuadratureRule",
    "DEFAULT_RULE",
    "DiscreteField",
    "quadrature_points",
    "interpolate",
    "element_gradients",
    "assemble_weighted_mass",
    "assemble_weighted_stiffness",
    "assemble_convection",
    "assemble_rhs",
    "apply_dirichlet",
    "energy_norm",
    "solve_linear",
    "l2_error",
]

"""A-posteriori switching indicators for the L-scheme/Newton pair.

Each indicator predicts, from the iterates ψ^i and ψ^{i−1}, the energy-norm
increment of the next iteration if it were done with Newton (L→N, N→L) or
with the same L-scheme (L→L). Flux fields ``sigma`` are optional and given at
the quadrature points, shape (n_triangles, n_points, 2).
"""
from __future__ import annotations

from dataclasses import dataclass
from hydroswitch._compat import StrEnum
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.typing import NDArray
from scipy import linalg

from hydroswitch.core.fem import assemble_convection, assemble_weighted_mass, assemble_weighted_stiffness
from hydroswitch.core.linearize import IterateState
from utils.logger import get_logger


logger = get_logger(__name__)

_DENSE_LIMIT = 400
_EIGEN_TOL = 1e-8


class EstimateKind(StrEnum):
    L_TO_N = "LN"
    N_TO_L = "NL"
    L_TO_L = "LL"


@dataclass(slots=True)
class SwitchEstimate:
    kind: EstimateKind
    value: float
    poten_part: float
    flux_part: float
    c_n: float
    degenerate_fraction: float
    available: bool = True

    @property
    def ratio_ready(self) -> bool:
        return self.available and np.isfinite(self.value)


def default_epsilon(L_theta: float, factor: float = 1e-4) -> float:
    return factor * L_theta


def degenerate_elements(state: IterateState, epsilon: float) -> NDArray[np.int64]:
    """Elements where θ′ of the iterate drops below ``epsilon`` at a quadrature point or vertex."""

    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    tri = state.problem.mesh.triangles
    lowest = np.minimum(state.dtheta.min(axis=1), state.dtheta_vertices[tri].min(axis=1))
    return np.flatnonzero(lowest < epsilon)


def _degenerate_mask(state: IterateState, epsilon: float) -> NDArray[np.bool_]:
    mask = np.zeros(state.problem.mesh.n_triangles, dtype=bool)
    mask[degenerate_elements(state, epsilon)] = True
    return mask


def pointwise_convection_bound(state: IterateState, tau: float | None = None) -> float:
    """Max over quadrature points of √(τ |K^{−1/2} (K∘θ)′ ∇(ψ+z)|² / θ′).

    An upper bound for :func:`convection_constant`. 0/0 counts as 0 and a
    positive numerator over θ′ = 0 as +∞.
    """

    tau = state.problem.tau if tau is None else tau
    head = np.einsum("td,td->t", state.head_grad, state.head_grad)[:, None]
    numerator = tau * state.dconductivity**2 * head / state.conductivity
    denominator = state.dtheta
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(
            numerator > 0.0,
            np.where(denominator > 0.0, numerator / np.where(denominator > 0.0, denominator, 1.0), np.inf),
            0.0,
        )
    return float(np.sqrt(np.max(ratio))) if ratio.size else 0.0


def _largest_generalized_eigenvalue(a: sp.csr_matrix, m: sp.csr_matrix) -> float:
    n = a.shape[0]
    if n <= _DENSE_LIMIT:
        values = linalg.eigh(a.toarray(), m.toarray(), eigvals_only=True, subset_by_index=[n - 1, n - 1])
        return float(values[-1])
    values = spla.eigsh(
        a,
        k=1,
        M=sp.csc_matrix(m),
        which="LA",
        v0=np.ones(n),
        tol=_EIGEN_TOL,
        return_eigenvectors=False,
    )
    return float(values[0])


def convection_constant(state: IterateState, tau: float | None = None) -> float:
    """C_N: smallest constant with −τ∫ δ (K∘θ)′ ∇(ψ+z)·∇δ ≤ (C_N/2)‖δ‖²_N for every discrete δ.

    Twice the largest eigenvalue, clipped at 0, of the negated symmetric part
    of the Newton convection matrix against the Newton norm matrix on the free
    vertices. Falls back to the pointwise bound when the norm matrix is
    singular or ARPACK fails.
    """

    problem = state.problem
    tau = problem.tau if tau is None else tau
    if not np.any(state.dconductivity):
        return 0.0
    mesh, rule = problem.mesh, problem.rule
    free = np.setdiff1d(np.arange(mesh.n_vertices), problem.dirichlet_dofs)
    if free.size == 0:
        return 0.0
    b = state.dconductivity[:, :, None] * state.head_grad[:, None, :]
    conv = assemble_convection(mesh, b, tau, rule)
    convection_free = sp.csr_matrix(-0.5 * (conv + conv.T))[free][:, free]
    norm = sp.csr_matrix(
        assemble_weighted_mass(mesh, state.dtheta, rule)
        + assemble_weighted_stiffness(mesh, state.conductivity, tau, rule)
    )[free][:, free]
    try:
        top = _largest_generalized_eigenvalue(convection_free, norm)
    except (np.linalg.LinAlgError, RuntimeError, ValueError) as exc:
        logger.debug(f"C_N eigenproblem failed ({exc}); using the pointwise bound")
        return pointwise_convection_bound(state, tau)
    return 2.0 * max(top, 0.0)


def _integrate(state: IterateState, values: NDArray[np.float64], mask: Optional[NDArray[np.bool_]] = None) -> float:
    mesh, rule = state.problem.mesh, state.problem.rule
    per_element = (values @ rule.weights) * mesh.areas
    if mask is not None:
        per_element = per_element[mask]
    return float(per_element.sum())


def _scaled(c_n: float, poten: float, flux: float, tau: float) -> float:
    if not c_n < 2.0:
        return float("inf")
    return 2.0 / (2.0 - c_n) * float(np.sqrt(poten**2 + tau * flux**2))


def _poten_part(
    state_i: IterateState,
    residual: NDArray[np.float64],
    keep: NDArray[np.bool_],
) -> float:
    weight = np.where(keep[:, None], state_i.dtheta, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        density = np.where(keep[:, None], residual**2 / weight, 0.0)
    return float(np.sqrt(max(_integrate(state_i, density, keep), 0.0)))


def _flux_part(state_i: IterateState, vector: NDArray[np.float64]) -> float:
    density = np.einsum("tqd,tqd->tq", vector, vector) / state_i.conductivity
    return float(np.sqrt(max(_integrate(state_i, density), 0.0)))


def _increment(state_i: IterateState, state_im1: IterateState) -> NDArray[np.float64]:
    return state_i.psi_q - state_im1.psi_q


def _conductivity_jump(state_i: IterateState, state_im1: IterateState) -> NDArray[np.float64]:
    """(K(θ(ψ^i)) − K(θ(ψ^{i−1}))) ∇(ψ^i + z) at the quadrature points."""
    dk = state_i.conductivity - state_im1.conductivity
    return dk[:, :, None] * state_i.head_grad[:, None, :]


def eta_L_to_N(
    state_i: IterateState,
    state_im1: IterateState,
    L: float,
    epsilon: float,
    sigma: Optional[NDArray[np.float64]] = None,
) -> SwitchEstimate:
    """Bound on the Newton increment that would follow the L-scheme iterate ψ^i."""

    tau = state_i.problem.tau
    c_n = convection_constant(state_i, tau)
    deg = _degenerate_mask(state_i, epsilon)
    residual = L * _increment(state_i, state_im1) - (state_i.theta - state_im1.theta)
    poten = _poten_part(state_i, residual, ~deg)
    vector = _conductivity_jump(state_i, state_im1)
    if sigma is not None:
        vector = vector + sigma
    flux = _flux_part(state_i, vector)
    value = _scaled(c_n, poten, flux, tau)
    return SwitchEstimate(EstimateKind.L_TO_N, value, poten, flux, c_n, float(deg.mean()), available=c_n < 2.0)


def eta_N_to_L(
    state_i: IterateState,
    state_im1: IterateState,
    epsilon: float,
    sigma: Optional[NDArray[np.float64]] = None,
) -> SwitchEstimate:
    """Bound on the next Newton increment after the Newton iterate ψ^i."""

    tau = state_i.problem.tau
    c_n = convection_constant(state_i, tau)
    deg = _degenerate_mask(state_i, epsilon)
    delta = _increment(state_i, state_im1)
    residual = state_im1.dtheta * delta - (state_i.theta - state_im1.theta)
    poten = _poten_part(state_i, residual, ~deg)
    taylor = (state_im1.dconductivity * delta)[:, :, None] * state_im1.head_grad[:, None, :]
    vector = _conductivity_jump(state_i, state_im1) - taylor
    if sigma is not None:
        vector = vector + sigma
    flux = _flux_part(state_i, vector)
    value = _scaled(c_n, poten, flux, tau)
    return SwitchEstimate(EstimateKind.N_TO_L, value, poten, flux, c_n, float(deg.mean()), available=c_n < 2.0)


def eta_L_to_L(state_i: IterateState, state_im1: IterateState, L: float) -> SwitchEstimate:
    """Bound on the next L-scheme increment with the same L; no degenerate-set treatment."""

    if L <= 0.0:
        raise ValueError(f"L must be positive, got {L}")
    tau = state_i.problem.tau
    residual = L * _increment(state_i, state_im1) - (state_i.theta - state_im1.theta)
    poten = float(np.sqrt(max(_integrate(state_i, residual**2 / L), 0.0)))
    flux = _flux_part(state_i, _conductivity_jump(state_i, state_im1))
    value = float(np.sqrt(poten**2 + tau * flux**2))
    return SwitchEstimate(EstimateKind.L_TO_L, value, poten, flux, float("nan"), 0.0)


def effectivity_index(estimate_prev: float, eta_lin_next: float) -> float:
    """Predicted bound over the realised next-iteration error."""

    if not eta_lin_next > 0.0:
        raise ValueError(f"effectivity needs a positive realised error, got {eta_lin_next}")
    return float(estimate_prev / eta_lin_next)


__all__ = [
    "EstimateKind",
    "SwitchEstimate",
    "default_epsilon",
    "degenerate_elements",
    "pointwise_convection_bound",
    "convection_constant",
    "eta_L_to_N",
    "eta_N_to_L",
    "eta_L_to_L",
    "effectivity_index",
]

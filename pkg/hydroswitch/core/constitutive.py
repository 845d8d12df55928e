"""Water-content and conductivity curves with the global bounds the estimators need."""
from __future__ import annotations

from functools import cached_property
from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import minimize_scalar

from utils.logger import get_logger


logger = get_logger(__name__)

WORKING_RANGE: Tuple[float, float] = (-50.0, 5.0)
_GRID_POINTS = 20001


def _finish(values: NDArray[np.float64], like: ArrayLike) -> NDArray[np.float64] | float:
    if np.ndim(like) == 0:
        return float(values)
    return values


class VanGenuchtenParams(BaseModel):
    """Van Genuchten–Mualem parameter record (contents dimensionless, K_s in m/day, alpha in 1/m)."""

    theta_R: float = Field(ge=0.0)
    theta_S: float = Field(le=1.0)
    K_s: float = Field(gt=0.0)
    alpha: float = Field(gt=0.0)
    n_vg: float = Field(gt=1.0)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_contents(self) -> "VanGenuchtenParams":
        if not self.theta_R < self.theta_S:
            raise ValueError(f"theta_R ({self.theta_R}) must be smaller than theta_S ({self.theta_S})")
        return self

    @property
    def m(self) -> float:
        return 1.0 - 1.0 / self.n_vg


class SoilModel:
    """Base interface for pressure-head constitutive relations.

    Subclasses provide the four pointwise curves; the bounds are derived
    numerically over ``working_range`` and cached on first use.
    """

    working_range: Tuple[float, float] = WORKING_RANGE

    def water_content(self, psi: ArrayLike) -> NDArray[np.float64] | float:  # pragma: no cover - interface
        raise NotImplementedError

    def water_content_derivative(self, psi: ArrayLike) -> NDArray[np.float64] | float:  # pragma: no cover - interface
        raise NotImplementedError

    def conductivity(self, psi: ArrayLike) -> NDArray[np.float64] | float:  # pragma: no cover - interface
        raise NotImplementedError

    def conductivity_derivative(self, psi: ArrayLike) -> NDArray[np.float64] | float:  # pragma: no cover - interface
        raise NotImplementedError

    @property
    def content_bounds(self) -> Tuple[float, float]:
        return (-np.inf, np.inf)

    @property
    def saturated_conductivity(self) -> float:
        """Conductivity K(1) used to weight equilibrated fluxes."""
        return float(np.max(self.conductivity(self._grid)))

    @cached_property
    def _grid(self) -> NDArray[np.float64]:
        lo, hi = self.working_range
        return np.linspace(lo, hi, _GRID_POINTS)

    def sup_theta_prime(self) -> float:
        return self.L_theta

    @cached_property
    def L_theta(self) -> float:
        lo, _ = self.working_range
        grid = np.linspace(lo, 0.0, _GRID_POINTS)
        values = np.asarray(self.water_content_derivative(grid))
        k = int(np.argmax(values))
        best = float(values[k])
        left = grid[max(k - 1, 0)]
        right = grid[min(k + 1, grid.size - 1)]
        if right > left:
            res = minimize_scalar(
                lambda p: -float(self.water_content_derivative(p)),
                bounds=(left, right),
                method="bounded",
                options={"xatol": 1e-12},
            )
            if res.success:
                best = max(best, -float(res.fun))
        return best

    @cached_property
    def theta_m(self) -> float:
        return float(max(np.min(self.water_content_derivative(self._grid)), 0.0))

    @cached_property
    def kappa_m(self) -> float:
        return float(np.min(self.conductivity(self._grid)))

    @cached_property
    def kappa_M(self) -> float:
        return float(np.max(self.conductivity(self._grid)))

    @cached_property
    def L_kappa(self) -> float:
        values = np.abs(np.asarray(self.conductivity_derivative(self._grid)))
        finite = values[np.isfinite(values)]
        return float(np.max(finite)) if finite.size else 0.0


class ConstitutiveModel(SoilModel):
    """Van Genuchten–Mualem curves θ(ψ), K(θ(ψ)) and their ψ-derivatives.

    All curves are vectorised; ψ > 0 is the saturated plateau and ψ = 0 takes
    the unsaturated-side limit.
    """

    def __init__(self, params: VanGenuchtenParams, *, working_range: Tuple[float, float] = WORKING_RANGE) -> None:
        self.params = params
        self.working_range = working_range

    def __repr__(self) -> str:
        p = self.params
        return (
            f"ConstitutiveModel(theta_R={p.theta_R}, theta_S={p.theta_S}, K_s={p.K_s}, "
            f"alpha={p.alpha}, n_vg={p.n_vg})"
        )

    @property
    def content_bounds(self) -> Tuple[float, float]:
        return (self.params.theta_R, self.params.theta_S)

    @property
    def saturated_conductivity(self) -> float:
        return self.params.K_s

    def _suction(self, psi: ArrayLike) -> NDArray[np.float64]:
        return np.maximum(-self.params.alpha * np.asarray(psi, dtype=float), 0.0)

    def effective_saturation(self, psi: ArrayLike) -> NDArray[np.float64] | float:
        s = self._suction(psi) ** self.params.n_vg
        return _finish(np.exp(-self.params.m * np.log1p(s)), psi)

    def water_content(self, psi: ArrayLike) -> NDArray[np.float64] | float:
        p = self.params
        sat = np.asarray(self.effective_saturation(psi))
        return _finish(p.theta_R + (p.theta_S - p.theta_R) * sat, psi)

    def water_content_derivative(self, psi: ArrayLike) -> NDArray[np.float64] | float:
        p = self.params
        x = self._suction(psi)
        s = x ** p.n_vg
        value = (p.theta_S - p.theta_R) * p.alpha * (p.n_vg - 1.0) * x ** (p.n_vg - 1.0) * (1.0 + s) ** (-p.m - 1.0)
        return _finish(value, psi)

    def _mualem_factor(self, s: NDArray[np.float64]) -> NDArray[np.float64]:
        # 1 - (s/(1+s))^m without cancellation for large suction
        with np.errstate(divide="ignore"):
            return -np.expm1(-self.params.m * np.log1p(1.0 / s))

    def conductivity(self, psi: ArrayLike) -> NDArray[np.float64] | float:
        p = self.params
        s = self._suction(psi) ** p.n_vg
        sat = np.exp(-p.m * np.log1p(s))
        g = self._mualem_factor(s)
        return _finish(p.K_s * np.sqrt(sat) * g * g, psi)

    def conductivity_derivative(self, psi: ArrayLike) -> NDArray[np.float64] | float:
        p = self.params
        psi_arr = np.asarray(psi, dtype=float)
        x = self._suction(psi_arr)
        s = x ** p.n_vg
        sat = np.exp(-p.m * np.log1p(s))
        g = self._mualem_factor(s)
        scale = p.alpha * (p.n_vg - 1.0)
        unsat = x > 0.0
        x_safe = np.where(unsat, x, 1.0)
        dlog_sat = scale * x_safe ** (p.n_vg - 1.0) / (1.0 + s)
        dg = scale * x_safe ** (p.n_vg - 2.0) * (1.0 + s) ** (-1.0 - p.m)
        value = p.K_s * (0.5 * np.sqrt(sat) * g * g * dlog_sat + 2.0 * np.sqrt(sat) * g * dg)
        value = np.where(unsat, value, np.where(psi_arr > 0.0, 0.0, self._derivative_at_zero()))
        return _finish(value, psi)

    def _derivative_at_zero(self) -> float:
        n = self.params.n_vg
        if n > 2.0:
            return 0.0
        if n == 2.0:
            return 2.0 * self.params.K_s * self.params.alpha
        return np.inf


class LinearModel(SoilModel):
    """θ(ψ) = θ₀ + cψ with constant conductivity; every linearisation is exact for it."""

    def __init__(self, slope: float, conductivity: float = 1.0, *, theta0: float = 0.0) -> None:
        if slope <= 0.0:
            raise ValueError(f"slope must be positive, got {slope}")
        if conductivity <= 0.0:
            raise ValueError(f"conductivity must be positive, got {conductivity}")
        self.slope = float(slope)
        self.k = float(conductivity)
        self.theta0 = float(theta0)

    def __repr__(self) -> str:
        return f"LinearModel(slope={self.slope}, conductivity={self.k}, theta0={self.theta0})"

    @property
    def saturated_conductivity(self) -> float:
        return self.k

    def water_content(self, psi: ArrayLike) -> NDArray[np.float64] | float:
        return _finish(self.theta0 + self.slope * np.asarray(psi, dtype=float), psi)

    def water_content_derivative(self, psi: ArrayLike) -> NDArray[np.float64] | float:
        return _finish(np.full(np.shape(psi), self.slope), psi)

    def conductivity(self, psi: ArrayLike) -> NDArray[np.float64] | float:
        return _finish(np.full(np.shape(psi), self.k), psi)

    def conductivity_derivative(self, psi: ArrayLike) -> NDArray[np.float64] | float:
        return _finish(np.zeros(np.shape(psi)), psi)

    @cached_property
    def L_theta(self) -> float:
        return self.slope


__all__ = [
    "WORKING_RANGE",
    "VanGenuchtenParams",
    "SoilModel",
    "ConstitutiveModel",
    "LinearModel",
]

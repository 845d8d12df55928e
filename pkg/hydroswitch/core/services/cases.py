"""Benchmark case definitions and the flat ``key = value`` case-file format."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from hydroswitch.core.constitutive import ConstitutiveModel, SoilModel, VanGenuchtenParams
from hydroswitch.core.mesh import BoundaryRegion, Mesh, Rect, region_edges, tag_boundary
from utils.logger import get_logger


logger = get_logger(__name__)

Array = NDArray[np.float64]
InitialCondition = Callable[[Array, Array], Array]
BoundaryValue = Callable[[float, Array, Array], Array]
SourceTerm = Callable[[float, Array, Array], Array]

# Parameter columns of the three benchmarks: (theta_R, theta_S, K_s, alpha, n_vg, L1, L2)
PARAMETER_TABLE: Dict[str, Tuple[float, ...]] = {
    "case1": (0.026, 0.42, 0.12, 0.551, 2.9, 0.1, 0.136),
    "case2": (0.026, 0.42, 0.12, 0.95, 2.9, 0.15, 0.2341),
    "case3": (0.131, 0.396, 4.96e-2, 0.423, 2.06, 3.501e-2, 4.501e-2),
}

_PARAM_KEYS = ("theta_R", "theta_S", "K_s", "alpha", "n_vg")
_NUMERIC_KEYS = {"nx": int, "nz": int, "tau": float, "steps": int, "L1": float, "L2": float}


def parameters_for(column: str) -> Tuple[VanGenuchtenParams, float, float]:
    try:
        row = PARAMETER_TABLE[column]
    except KeyError as exc:
        raise ValueError(f"unknown parameter column '{column}'") from exc
    params = VanGenuchtenParams(**dict(zip(_PARAM_KEYS, row[:5])))
    return params, row[5], row[6]


@dataclass(frozen=True)
class DirichletCondition:
    region: BoundaryRegion
    value: BoundaryValue


@dataclass(frozen=True)
class CaseSpec:
    """Everything needed to run one benchmark: geometry, data, parameters and L values."""

    name: str
    rect: Rect
    nx: int
    nz: int
    tau: float
    steps: int
    params: Optional[VanGenuchtenParams]
    initial: InitialCondition
    dirichlet: Tuple[DirichletCondition, ...]
    source: SourceTerm
    L1: float
    L2: float
    model: Optional[SoilModel] = None
    exact: Optional[InitialCondition] = None
    notes: Tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.nx < 1 or self.nz < 1:
            raise ValueError(f"mesh resolution must be positive, got {self.nx}x{self.nz}")
        if self.tau <= 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.steps < 1:
            raise ValueError(f"steps must be at least 1, got {self.steps}")
        if self.L1 <= 0.0 or self.L2 <= 0.0:
            raise ValueError("L1 and L2 must be positive")
        if self.params is None and self.model is None:
            raise ValueError("a case needs van Genuchten parameters or an explicit model")

    @property
    def final_time(self) -> float:
        return self.tau * self.steps

    def build_model(self) -> SoilModel:
        if self.model is not None:
            return self.model
        return ConstitutiveModel(self.params)  # type: ignore[arg-type]

    def dirichlet_data(self, mesh: Mesh, t: float) -> Tuple[NDArray[np.int64], Array]:
        """Constrained vertices and their values at time ``t``; later regions win on overlaps."""

        values: Dict[int, float] = {}
        for condition in self.dirichlet:
            dofs = tag_boundary(mesh, condition.region)
            if dofs.size == 0:
                raise ValueError(f"Dirichlet region '{condition.region.tag}' selects no vertices")
            xz = mesh.vertices[dofs]
            data = np.broadcast_to(np.asarray(condition.value(t, xz[:, 0], xz[:, 1]), dtype=float), dofs.shape)
            values.update(zip(dofs.tolist(), data.tolist()))
        dofs = np.array(sorted(values), dtype=np.int64)
        return dofs, np.array([values[d] for d in dofs.tolist()], dtype=float)

    def dirichlet_edges(self, mesh: Mesh) -> NDArray[np.int64]:
        edges = [region_edges(mesh, c.region) for c in self.dirichlet]
        if not edges:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate(edges))

    def with_overrides(self, **overrides: float | int | str) -> "CaseSpec":
        """Copy with resolution/time/parameter overrides (``theta_R`` … ``n_vg`` update the parameters)."""

        param_updates = {k: float(overrides.pop(k)) for k in list(overrides) if k in _PARAM_KEYS}
        unknown = set(overrides) - set(_NUMERIC_KEYS)
        if unknown:
            raise ValueError(f"unknown case override(s): {', '.join(sorted(unknown))}")
        updates = {k: _NUMERIC_KEYS[k](v) for k, v in overrides.items()}
        if param_updates:
            if self.params is None or self.model is not None:
                raise ValueError(f"case '{self.name}' does not accept parameter overrides")
            merged = {**self.params.model_dump(), **param_updates}
            updates["params"] = VanGenuchtenParams(**merged)
        return dataclasses.replace(self, **updates)


def _top(rect: Rect) -> BoundaryRegion:
    return BoundaryRegion.side(rect, "top")


def case1(nx: int = 40, nz: Optional[int] = None, tau: float = 0.01) -> CaseSpec:
    """Strictly unsaturated column with a localised source; one time step."""

    rect: Rect = (0.0, 0.0, 1.0, 1.0)
    params, L1, L2 = parameters_for("case1")
    split = 0.25
    tol = 1e-12

    def initial(x: Array, z: Array) -> Array:
        return np.where(z <= split + tol, -z - 0.25, -4.0) + 0.0 * x

    def source(t: float, x: Array, z: Array) -> Array:
        return np.where(z > split + tol, 0.06 * np.cos(4.0 * np.pi * z / 3.0) * np.sin(x), 0.0)

    top = DirichletCondition(_top(rect), lambda t, x, z: initial(x, z))
    return CaseSpec(
        name="case1",
        rect=rect,
        nx=nx,
        nz=nx if nz is None else nz,
        tau=tau,
        steps=1,
        params=params,
        initial=initial,
        dirichlet=(top,),
        source=source,
        L1=L1,
        L2=L2,
    )


def case2(
    nx: int = 40,
    nz: Optional[int] = None,
    tau: float = 0.01,
    *,
    parameter_column: str = "case2",
) -> CaseSpec:
    """Groundwater table below a dry vadose zone; one time step."""

    rect: Rect = (0.0, 0.0, 1.0, 1.0)
    params, L1, L2 = parameters_for(parameter_column)
    table = 0.25
    tol = 1e-12

    def initial(x: Array, z: Array) -> Array:
        return np.where(z < table - tol, -z + 0.25, -3.0) + 0.0 * x

    def source(t: float, x: Array, z: Array) -> Array:
        return np.where(
            z >= table - tol,
            0.006 * np.cos(4.0 * np.pi * (z - 1.0) / 3.0) * np.sin(2.0 * np.pi * x),
            0.0,
        )

    top = DirichletCondition(_top(rect), lambda t, x, z: initial(x, z))
    notes = ()
    if parameter_column != "case2":
        notes = (f"case2 uses the '{parameter_column}' parameter column",)
    return CaseSpec(
        name="case2",
        rect=rect,
        nx=nx,
        nz=nx if nz is None else nz,
        tau=tau,
        steps=1,
        params=params,
        initial=initial,
        dirichlet=(top,),
        source=source,
        L1=L1,
        L2=L2,
        notes=notes,
    )


def trench_head(t: float) -> float:
    """Ramp on the drainage trench: −2 + 35.2 t up to t = 1/16, then 0.2."""
    return -2.0 + 35.2 * t if t <= 1.0 / 16.0 else 0.2


def case3(nx: int = 40, nz: int = 60, tau: float = 1.0 / 48.0, steps: int = 9) -> CaseSpec:
    """Recharge of a reservoir from a drainage trench on [0,2]×[0,3]."""

    rect: Rect = (0.0, 0.0, 2.0, 3.0)
    params, L1, L2 = parameters_for("case3")

    def initial(x: Array, z: Array) -> Array:
        return 1.0 - z + 0.0 * x

    def source(t: float, x: Array, z: Array) -> Array:
        return np.zeros(np.broadcast(x, z).shape)

    trench = DirichletCondition(
        BoundaryRegion.segment("trench", x=(0.0, 1.0), z=3.0),
        lambda t, x, z: np.full(np.shape(x), trench_head(t)),
    )
    reservoir = DirichletCondition(
        BoundaryRegion.segment("reservoir", x=2.0, z=(0.0, 1.0)),
        lambda t, x, z: 1.0 - z,
    )
    return CaseSpec(
        name="case3",
        rect=rect,
        nx=nx,
        nz=nz,
        tau=tau,
        steps=steps,
        params=params,
        initial=initial,
        dirichlet=(trench, reservoir),
        source=source,
        L1=L1,
        L2=L2,
        notes=("41x61 vertex grid (square cells of side 0.05) gives the 2501-node mesh",),
    )


def manufactured_case(nx: int = 8, tau: float = 1e-3) -> CaseSpec:
    """Stationary smooth unsaturated head with the matching source; Dirichlet on all of ∂Ω."""

    rect: Rect = (0.0, 0.0, 1.0, 1.0)
    params, L1, L2 = parameters_for("case1")
    model = ConstitutiveModel(params)

    def exact(x: Array, z: Array) -> Array:
        return -2.0 + 0.5 * np.sin(np.pi * x) * np.cos(np.pi * z)

    def source(t: float, x: Array, z: Array) -> Array:
        psi = exact(x, z)
        px = 0.5 * np.pi * np.cos(np.pi * x) * np.cos(np.pi * z)
        pz = -0.5 * np.pi * np.sin(np.pi * x) * np.sin(np.pi * z)
        lap = -(np.pi**2) * np.sin(np.pi * x) * np.cos(np.pi * z)
        k = np.asarray(model.conductivity(psi))
        dk = np.asarray(model.conductivity_derivative(psi))
        return -(dk * (px * px + pz * pz + pz) + k * lap)

    boundary = DirichletCondition(BoundaryRegion.whole_boundary(), lambda t, x, z: exact(x, z))
    return CaseSpec(
        name="mms",
        rect=rect,
        nx=nx,
        nz=nx,
        tau=tau,
        steps=1,
        params=params,
        initial=exact,
        dirichlet=(boundary,),
        source=source,
        L1=L1,
        L2=L2,
        model=model,
        exact=exact,
    )


def builtin_cases(*, case2_parameter_column: str = "case2") -> Dict[str, CaseSpec]:
    return {
        "case1": case1(),
        "case2": case2(parameter_column=case2_parameter_column),
        "case3": case3(),
        "mms": manufactured_case(),
    }


def _parse_value(raw: str) -> str:
    return raw.split("#", 1)[0].strip()


def load_case_file(path: str | Path, *, case2_parameter_column: str = "case2") -> CaseSpec:
    """Read a ``key = value`` case file; ``base`` picks a builtin case, the rest override it."""

    entries: Dict[str, str] = {}
    with Path(path).open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got '{stripped}'")
            key, value = (part.strip() for part in stripped.split("=", 1))
            if not key or not value:
                raise ValueError(f"{path}:{lineno}: empty key or value")
            entries[key] = _parse_value(value)

    base = entries.pop("base", "case1")
    cases = builtin_cases(case2_parameter_column=case2_parameter_column)
    if base not in cases:
        raise ValueError(f"{path}: unknown base case '{base}' (expected one of {', '.join(cases)})")
    overrides: Dict[str, float | int | str] = {}
    for key, value in entries.items():
        if key in _NUMERIC_KEYS:
            try:
                overrides[key] = _NUMERIC_KEYS[key](float(value)) if _NUMERIC_KEYS[key] is int else float(value)
            except ValueError as exc:
                raise ValueError(f"{path}: '{key}' must be numeric, got '{value}'") from exc
        elif key in _PARAM_KEYS:
            try:
                overrides[key] = float(value)
            except ValueError as exc:
                raise ValueError(f"{path}: '{key}' must be numeric, got '{value}'") from exc
        else:
            raise ValueError(f"{path}: unknown key '{key}'")
    spec = cases[base].with_overrides(**overrides)
    logger.debug(f"Loaded case file {path}: base={base}, overrides={overrides}")
    return spec


__all__ = [
    "PARAMETER_TABLE",
    "DirichletCondition",
    "CaseSpec",
    "parameters_for",
    "trench_head",
    "case1",
    "case2",
    "case3",
    "manufactured_case",
    "builtin_cases",
    "load_case_file",
]

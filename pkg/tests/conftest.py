"""Shared fixtures: parameter sets, small meshes and step problems."""
from __future__ import annotations

from typing import Callable, Optional

import numpy as np
import pytest

from hydroswitch.core.constitutive import ConstitutiveModel, LinearModel, SoilModel, VanGenuchtenParams
from hydroswitch.core.fem import quadrature_points
from hydroswitch.core.linearize import LinearizationProblem
from hydroswitch.core.mesh import Mesh, build_structured
from hydroswitch.core.services.cases import CaseSpec, case1, parameters_for


@pytest.fixture
def case1_params() -> VanGenuchtenParams:
    return parameters_for("case1")[0]


@pytest.fixture
def vg_model(case1_params: VanGenuchtenParams) -> ConstitutiveModel:
    return ConstitutiveModel(case1_params)


@pytest.fixture
def linear_model() -> LinearModel:
    return LinearModel(slope=0.2, conductivity=0.5)


@pytest.fixture
def unit_mesh() -> Mesh:
    return build_structured(4, 4)


def problem_for(case: CaseSpec, *, model: Optional[SoilModel] = None, step: int = 1) -> LinearizationProblem:
    """Backward-Euler step ``step`` of ``case`` starting from its initial condition."""

    mesh = build_structured(case.nx, case.nz, case.rect)
    x, z = mesh.vertices[:, 0], mesh.vertices[:, 1]
    psi = np.broadcast_to(np.asarray(case.initial(x, z), dtype=float), (mesh.n_vertices,)).copy()
    t = step * case.tau
    qp = quadrature_points(mesh)
    source = np.broadcast_to(np.asarray(case.source(t, qp[..., 0], qp[..., 1]), dtype=float), qp.shape[:2]).copy()
    dofs, values = case.dirichlet_data(mesh, t)
    return LinearizationProblem(
        mesh=mesh,
        model=model if model is not None else case.build_model(),
        tau=case.tau,
        psi_old=psi,
        source=source,
        dirichlet_dofs=dofs,
        dirichlet_values=values,
    )


@pytest.fixture
def make_problem() -> Callable[..., LinearizationProblem]:
    return problem_for


@pytest.fixture
def small_case1() -> CaseSpec:
    return case1(nx=6)

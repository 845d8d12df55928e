"""Benchmark definitions and case files."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hydroswitch.core.constitutive import ConstitutiveModel
from hydroswitch.core.mesh import build_structured
from hydroswitch.core.services.cases import (
    PARAMETER_TABLE,
    builtin_cases,
    case1,
    case2,
    case3,
    load_case_file,
    manufactured_case,
    parameters_for,
    trench_head,
)


class TestParameters:
    def test_case1_column(self):
        params, L1, L2 = parameters_for("case1")
        assert (params.theta_R, params.theta_S, params.K_s, params.alpha, params.n_vg) == (0.026, 0.42, 0.12, 0.551, 2.9)
        assert (L1, L2) == (0.1, 0.136)

    @pytest.mark.parametrize("column", sorted(PARAMETER_TABLE))
    def test_L2_is_sup_theta_prime(self, column):
        params, L1, L2 = parameters_for(column)
        L_theta = ConstitutiveModel(params).L_theta
        assert L2 == pytest.approx(L_theta, rel=5e-3)
        assert 0.5 * L_theta < L1 < L_theta

    def test_every_column_builds(self):
        for column in PARAMETER_TABLE:
            params, L1, L2 = parameters_for(column)
            assert params.theta_R < params.theta_S
            assert 0.0 < L1 < L2

    def test_unknown_column(self):
        with pytest.raises(ValueError):
            parameters_for("case9")


class TestTrench:
    @pytest.mark.parametrize(("t", "expected"), [(0.0, -2.0), (1.0 / 32.0, -0.9), (1.0 / 16.0, 0.2), (0.1, 0.2)])
    def test_ramp(self, t, expected):
        assert trench_head(t) == pytest.approx(expected)


class TestBuiltins:
    def test_names(self):
        assert set(builtin_cases()) == {"case1", "case2", "case3", "mms"}

    def test_case1_initial_and_boundary(self):
        case = case1(nx=4)
        mesh = build_structured(case.nx, case.nz, case.rect)
        psi0 = case.initial(mesh.vertices[:, 0], mesh.vertices[:, 1])
        low = mesh.vertices[:, 1] <= 0.25
        assert_allclose(psi0[low], -mesh.vertices[low, 1] - 0.25)
        assert_allclose(psi0[~low], -4.0)
        dofs, values = case.dirichlet_data(mesh, case.tau)
        assert dofs.size == 5
        assert_allclose(mesh.vertices[dofs, 1], 1.0)
        assert_allclose(values, -4.0)

    def test_case2_water_table(self):
        case = case2(nx=4)
        psi0 = case.initial(np.zeros(2), np.array([0.0, 0.5]))
        assert_allclose(psi0, [0.25, -3.0])

    def test_case2_parameter_column(self):
        case = case2(parameter_column="case3")
        assert case.L2 == 4.501e-2
        assert case.notes

    def test_case3_dirichlet_regions(self):
        case = case3()
        mesh = build_structured(case.nx, case.nz, case.rect)
        assert mesh.n_vertices == 41 * 61
        dofs, values = case.dirichlet_data(mesh, 0.0)
        assert dofs.size == 42
        xz = mesh.vertices[dofs]
        reservoir = np.isclose(xz[:, 0], 2.0)
        assert_allclose(values[reservoir], 1.0 - xz[reservoir, 1])
        assert_allclose(values[~reservoir], -2.0)
        assert case.final_time == pytest.approx(9.0 / 48.0)

    def test_manufactured_case_carries_exact_solution(self):
        case = manufactured_case()
        assert case.exact is not None
        assert case.name == "mms"


class TestOverrides:
    def test_resolution_and_parameters(self):
        case = case1().with_overrides(nx=10, tau=0.5, alpha=0.6)
        assert (case.nx, case.tau) == (10, 0.5)
        assert case.params.alpha == 0.6
        assert case.params.n_vg == 2.9

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            case1().with_overrides(depth=2)

    def test_fixed_model_rejects_parameters(self):
        with pytest.raises(ValueError):
            manufactured_case().with_overrides(alpha=0.3)

    def test_invalid_values(self):
        with pytest.raises(ValueError):
            case1().with_overrides(tau=0.0)


class TestCaseFile:
    def test_base_and_overrides(self, tmp_path):
        path = tmp_path / "trench.case"
        path.write_text("# coarse trench\nbase = case3\nnx = 8   # cells\nnz = 12\nsteps = 2\n", encoding="utf-8")
        case = load_case_file(path)
        assert case.name == "case3"
        assert (case.nx, case.nz, case.steps) == (8, 12, 2)

    def test_default_base(self, tmp_path):
        path = tmp_path / "plain.case"
        path.write_text("n_vg = 2.5\n", encoding="utf-8")
        case = load_case_file(path)
        assert case.name == "case1"
        assert case.params.n_vg == 2.5

    @pytest.mark.parametrize("text", ["depth = 3\n", "base = case7\n", "nx = many\n", "just words\n"])
    def test_rejections(self, tmp_path, text):
        path = tmp_path / "bad.case"
        path.write_text(text, encoding="utf-8")
        with pytest.raises(ValueError):
            load_case_file(path)

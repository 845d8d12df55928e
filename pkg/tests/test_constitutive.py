"""Tests for the van Genuchten–Mualem curves and the derived bounds."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from hydroswitch.core.constitutive import ConstitutiveModel, LinearModel, VanGenuchtenParams
from hydroswitch.core.services.cases import parameters_for


class TestWaterContent:
    """θ(ψ) and its derivative."""

    def test_saturated_plateau(self, vg_model, case1_params):
        assert_allclose(vg_model.water_content(0.0), case1_params.theta_S)
        assert_allclose(vg_model.water_content(1.5), case1_params.theta_S)
        assert vg_model.water_content_derivative(0.7) == 0.0

    def test_bounds_and_monotonicity(self, vg_model, case1_params):
        psi = np.linspace(-100.0, 0.0, 400)
        theta = vg_model.water_content(psi)
        assert np.all(theta >= case1_params.theta_R)
        assert np.all(theta <= case1_params.theta_S)
        assert np.all(np.diff(theta) >= 0.0)

    def test_derivative_matches_finite_differences(self, vg_model):
        psi = np.linspace(-5.0, -0.1, 25)
        h = 1e-6
        fd = (vg_model.water_content(psi + h) - vg_model.water_content(psi - h)) / (2 * h)
        assert_allclose(vg_model.water_content_derivative(psi), fd, rtol=1e-5, atol=1e-9)

    def test_scalar_in_scalar_out(self, vg_model):
        assert isinstance(vg_model.water_content(-1.0), float)
        assert isinstance(vg_model.conductivity(-1.0), float)
        assert vg_model.water_content(np.array([-1.0, -2.0])).shape == (2,)


class TestConductivity:
    """K(θ(ψ)) and its derivative."""

    def test_saturated_value(self, vg_model, case1_params):
        assert_allclose(vg_model.conductivity(0.0), case1_params.K_s)
        assert_allclose(vg_model.conductivity(2.0), case1_params.K_s)

    def test_decreases_with_suction(self, vg_model):
        k = vg_model.conductivity(np.linspace(-20.0, 0.0, 200))
        assert np.all(np.diff(k) >= 0.0)
        assert np.all(k > 0.0)

    def test_derivative_matches_finite_differences(self, vg_model):
        psi = np.linspace(-5.0, -0.1, 25)
        h = 1e-6
        fd = (vg_model.conductivity(psi + h) - vg_model.conductivity(psi - h)) / (2 * h)
        assert_allclose(vg_model.conductivity_derivative(psi), fd, rtol=1e-5, atol=1e-10)

    @pytest.mark.parametrize(
        "n_vg, expected",
        [(2.9, 0.0), (2.0, 2.0 * 0.12 * 0.551), (1.5, np.inf)],
    )
    def test_derivative_at_zero(self, n_vg, expected):
        params = VanGenuchtenParams(theta_R=0.026, theta_S=0.42, K_s=0.12, alpha=0.551, n_vg=n_vg)
        model = ConstitutiveModel(params)
        assert model.conductivity_derivative(0.0) == pytest.approx(expected)

    def test_derivative_vanishes_when_saturated(self, vg_model):
        assert vg_model.conductivity_derivative(0.3) == 0.0


class TestBounds:
    """Global constants derived over the working range."""

    @pytest.mark.parametrize("column, expected", [("case1", 0.136), ("case2", 0.2341), ("case3", 0.04501)])
    def test_L_theta_matches_tabulated_L2(self, column, expected):
        params, _, _ = parameters_for(column)
        assert ConstitutiveModel(params).L_theta == pytest.approx(expected, rel=5e-3)

    def test_L_theta_is_attained_maximum(self, vg_model):
        grid = np.linspace(-50.0, 0.0, 5001)
        assert vg_model.L_theta >= np.max(vg_model.water_content_derivative(grid)) - 1e-12
        assert vg_model.sup_theta_prime() == vg_model.L_theta

    def test_conductivity_bounds(self, vg_model, case1_params):
        assert vg_model.kappa_M == pytest.approx(case1_params.K_s)
        assert 0.0 < vg_model.kappa_m < vg_model.kappa_M
        assert vg_model.theta_m >= 0.0


class TestParameters:
    """Validation of the parameter record."""

    def test_rejects_inverted_contents(self):
        with pytest.raises(ValidationError):
            VanGenuchtenParams(theta_R=0.5, theta_S=0.4, K_s=1.0, alpha=1.0, n_vg=2.0)

    def test_rejects_n_at_most_one(self):
        with pytest.raises(ValidationError):
            VanGenuchtenParams(theta_R=0.1, theta_S=0.4, K_s=1.0, alpha=1.0, n_vg=1.0)

    def test_m_from_n(self, case1_params):
        assert case1_params.m == pytest.approx(1.0 - 1.0 / 2.9)


class TestLinearModel:
    def test_curves(self, linear_model):
        psi = np.array([-2.0, -0.5, 0.0])
        assert_allclose(linear_model.water_content(psi), 0.2 * psi)
        assert_allclose(linear_model.water_content_derivative(psi), 0.2)
        assert_allclose(linear_model.conductivity(psi), 0.5)
        assert_allclose(linear_model.conductivity_derivative(psi), 0.0)
        assert linear_model.L_theta == 0.2

    def test_rejects_non_positive_slope(self):
        with pytest.raises(ValueError):
            LinearModel(slope=0.0)

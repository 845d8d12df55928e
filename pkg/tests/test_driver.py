"""Switching logic, L-adaptivity and the time loop."""

import dataclasses
import re

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from hydroswitch.core.constitutive import LinearModel
from hydroswitch.core.events import EventTopic, subscribe_event
from hydroswitch.core.services.cases import case1, case3
from hydroswitch.core.services.driver import (
    RunStatus,
    SolverConfig,
    Strategy,
    l_adaptive_update,
    run_case,
    switching_decision,
)


@pytest.fixture
def linear_case():
    return dataclasses.replace(case1(nx=4), model=LinearModel(slope=0.2, conductivity=0.5))


class TestSwitchingDecision:
    def test_stays_on_l_when_convection_dominates(self):
        assert switching_decision("L", 3.0, 0.1, None, 1.0, 1.5) == "L"

    def test_switches_to_newton_within_tolerance(self):
        assert switching_decision("L", 1.0, 1.4, None, 1.0, 1.5) == "N"

    def test_stays_on_l_outside_tolerance(self):
        assert switching_decision("L", 1.0, 1.6, None, 1.0, 1.5) == "L"

    def test_leaves_newton_when_estimate_grows(self):
        assert switching_decision("N", 1.0, None, 1.01, 1.0, 1.5) == "L"

    def test_keeps_newton(self):
        assert switching_decision("N", 1.0, None, 0.5, 1.0, 1.5) == "N"

    def test_leaves_newton_when_convection_dominates(self):
        assert switching_decision("N", 2.0, None, 0.5, 1.0, 1.5) == "L"


class TestLAdaptiveUpdate:
    def test_grows_when_estimate_exceeds_error(self):
        L_M = 0.136
        L, L_m = l_adaptive_update(L_M / 8, L_M / 8, L_M, [(2.0, 1.0)])
        assert L == pytest.approx(np.sqrt(2.0) * L_M / 8)
        assert L_m == pytest.approx(L_M / 8)

    def test_growth_is_capped(self):
        assert l_adaptive_update(0.9, 0.5, 1.0, [(2.0, 1.0)]) == (1.0, 0.9)

    def test_shrinks_after_three_pessimistic_ratios(self):
        L, L_m = l_adaptive_update(1.0, 0.5, 2.0, [(0.9, 1.0)] * 3)
        assert L == pytest.approx(0.9)
        assert L_m == 0.5

    def test_shrink_respects_lower_bound(self):
        L, _ = l_adaptive_update(0.6, 0.58, 2.0, [(0.9, 1.0)] * 3)
        assert L == pytest.approx(1.1 * 0.58)

    @pytest.mark.parametrize("history", [[(0.5, 1.0)], [(0.9, 1.0), (0.9, 1.0)], []])
    def test_unchanged(self, history):
        assert l_adaptive_update(1.0, 0.5, 2.0, history) == (1.0, 0.5)


class TestSolverConfig:
    def test_defaults(self):
        config = SolverConfig()
        assert config.c_tol == 1.5
        assert config.stop_tol == 1e-7
        assert config.max_iters == 500
        assert config.linear_rtol == 1e-12

    @pytest.mark.parametrize("kwargs", [{"c_tol": 1.0}, {"stop_tol": 0.0}, {"linear_rtol": 1.0}, {"unknown": 1}])
    def test_validation(self, kwargs):
        with pytest.raises(ValidationError):
            SolverConfig(**kwargs)

    def test_from_settings_ignores_missing_overrides(self):
        config = SolverConfig.from_settings(strategy="newton", L=None, c_tol=2.0)
        assert config.strategy is Strategy.NEWTON
        assert config.L is None
        assert config.c_tol == 2.0


class TestLinearRuns:
    """On a linear problem the first iterate is the solution; the second confirms it."""

    @pytest.mark.parametrize("strategy", ["newton", "ln"])
    def test_two_iterations(self, linear_case, strategy):
        report = run_case(linear_case, SolverConfig(strategy=strategy, L=0.2))
        assert report.converged
        assert report.total_iterations == 2

    def test_l_scheme_with_slope_matches_newton(self, linear_case):
        newton = run_case(linear_case, SolverConfig(strategy="newton"))
        lscheme = run_case(linear_case, SolverConfig(strategy="l", L=0.2))
        assert_allclose(lscheme.psi, newton.psi, atol=1e-10)


class TestVanGenuchtenRuns:
    def test_adaptive_switching(self, small_case1):
        report = run_case(small_case1, SolverConfig(strategy="ln"))
        assert report.converged
        assert re.fullmatch(r"\d+ iterations \(\d+/\d+\)", report.summary())
        records = report.records
        assert records[0].scheme == "L"
        assert report.newton_iterations > 0
        for before, after in zip(records, records[1:]):
            if after.scheme == "N":
                assert before.C_N is not None and before.C_N < 2.0
        assert records[-1].eta_lin < 1e-7

    def test_wetting_front_does_not_block_newton(self):
        report = run_case(case1(nx=10), SolverConfig(strategy="ln", timings=False))
        assert report.converged
        assert all(r.C_N is not None and r.C_N < 2.0 for r in report.records)
        assert report.newton_iterations >= report.l_iterations

    def test_effectivity_only_on_newton_rows(self, small_case1):
        report = run_case(small_case1, SolverConfig(strategy="ln"))
        for record in report.records:
            if record.eff_index is not None:
                assert record.scheme == "N"

    def test_l_adaptive_keeps_L_in_range(self, small_case1):
        report = run_case(small_case1, SolverConfig(strategy="ladapt"))
        L_theta = report.model.L_theta
        Ls = [r.L for r in report.records]
        assert report.converged
        assert Ls[0] == pytest.approx(L_theta / 8)
        assert all(L_theta / 8 - 1e-12 <= L <= L_theta + 1e-12 for L in Ls)

    @pytest.mark.parametrize("strategy", ["mpicard", "jk", "ml", "ln-adapt"])
    def test_other_strategies_converge(self, small_case1, strategy):
        assert run_case(small_case1, SolverConfig(strategy=strategy)).converged

    def test_equilibrated_flux_option(self, small_case1):
        assert run_case(small_case1, SolverConfig(strategy="ln", eqflux=True)).converged

    def test_deterministic(self, small_case1):
        config = SolverConfig(strategy="ln", timings=False)
        first = [(r.scheme, r.eta_lin, r.eta_LN) for r in run_case(small_case1, config).records]
        second = [(r.scheme, r.eta_lin, r.eta_LN) for r in run_case(small_case1, config).records]
        assert first == second

    def test_iteration_cap_is_divergence(self, small_case1):
        report = run_case(small_case1, SolverConfig(strategy="l", max_iters=2))
        assert report.status is RunStatus.DIVERGED
        assert report.failed_step == 1
        assert "diverged" in report.summary()

    def test_saturation_stays_in_bounds(self, small_case1):
        report = run_case(small_case1, SolverConfig(strategy="ln"))
        theta = report.model.water_content(report.psi)
        lo, hi = report.model.content_bounds
        assert np.all((theta >= lo) & (theta <= hi))


class TestTimeLoop:
    def test_multi_step_run_and_events(self):
        case = case3(nx=8, nz=12, steps=3)
        steps, finished = [], []
        unsub_step = subscribe_event(EventTopic.STEP_COMPLETED, steps.append)
        unsub_run = subscribe_event(EventTopic.RUN_FINISHED, finished.append)
        try:
            report = run_case(case, SolverConfig(strategy="newton"))
        finally:
            unsub_step()
            unsub_run()
        assert report.converged
        assert [s["step"] for s in steps] == [1, 2, 3]
        assert len(report.steps) == 3
        assert finished[0]["total_iterations"] == report.total_iterations
        assert finished[0]["status"] == "converged"

"""End-to-end command-line behaviour on tiny meshes."""

import json

import pytest

from hydroswitch.cli import main
from hydroswitch.cli.common import resolve_L, resolve_case
from hydroswitch.utils.export import ITERATION_COLUMNS, read_iterations_csv, read_vtk_point_data
from utils.logger import is_debug_enabled, set_debug_mode


class TestRun:
    def test_writes_outputs(self, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(["run", "--case", "case1", "--nx", "4", "--strategy", "ln", "--out", str(out)])
        assert code == 0
        rows = read_iterations_csv(out / "iterations.csv")
        assert rows and rows[-1]["eta_lin"] < 1e-7
        assert read_vtk_point_data(out / "field_final.vtk")["pressure_head"].size == 25
        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["status"] == "converged"
        assert manifest["case"]["nx"] == 4
        assert manifest["config"]["strategy"] == "ln"
        assert manifest["invocation"][:2] == ["hydroswitch", "run"]
        assert manifest["total_iterations"] == len(rows)
        assert manifest["summary"].startswith(f"{len(rows)} iterations")
        assert "iterations (" in capsys.readouterr().out

    def test_logs_are_reproducible_without_timings(self, tmp_path):
        argv = ["run", "--case", "case1", "--nx", "4", "--no-timings", "--out"]
        assert main([*argv, str(tmp_path / "a")]) == 0
        assert main([*argv, str(tmp_path / "b")]) == 0
        first = (tmp_path / "a" / "iterations.csv").read_bytes()
        assert first == (tmp_path / "b" / "iterations.csv").read_bytes()
        assert first.splitlines()[0].decode() == ",".join(ITERATION_COLUMNS)

    def test_divergence_exit_code(self, tmp_path):
        code = main(["run", "--case", "case1", "--nx", "4", "--strategy", "l", "--max-iters", "1", "--out", str(tmp_path)])
        assert code == 2
        manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["status"] == "diverged"

    def test_verbose_enables_debug_logging(self, tmp_path):
        argv = ["run", "--case", "case1", "--nx", "2", "--out"]
        try:
            assert main([*argv, str(tmp_path / "loud"), "--verbose"]) == 0
            assert is_debug_enabled()
            assert main([*argv, str(tmp_path / "quiet"), "--log-level", "INFO"]) == 0
            assert not is_debug_enabled()
        finally:
            set_debug_mode(False)

    @pytest.mark.parametrize(
        "argv",
        [
            ["run", "--case", "nowhere"],
            ["run", "--bogus"],
            ["run", "--strategy", "secant"],
            ["run", "--ctol", "0.5"],
            ["run", "--L", "big"],
            ["run", "--h", "0.1", "--nx", "4"],
            ["sweep", "--values", "4", "--strategies"],
            ["report", "missing.csv"],
        ],
    )
    def test_bad_input(self, tmp_path, argv):
        assert main([*argv, "--out", str(tmp_path)] if argv[0] != "report" else [argv[0], str(tmp_path / argv[1])]) == 1


class TestSweepAndReport:
    def test_mesh_sweep_then_report(self, tmp_path):
        out = tmp_path / "sweep"
        code = main(
            ["sweep", "--case", "case1", "--axis", "mesh", "--values", "2", "4", "--strategies", "l", "ln", "--out", str(out)]
        )
        assert code == 0
        lines = (out / "sweep.csv").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 5
        log = out / "ln_mesh-4" / "iterations.csv"
        assert log.is_file()
        assert main(["report", str(log)]) == 0
        report = (out / "ln_mesh-4" / "report.csv").read_text(encoding="utf-8").splitlines()
        assert report[0] == "step,iter,scheme,ratio_LN,ratio_NL,ratio_LL,eff_index"
        assert len(report) == len(read_iterations_csv(log)) + 1

    def test_sweep_with_diverged_run_exits_nonzero(self, tmp_path):
        out = tmp_path / "capped"
        argv = ["sweep", "--case", "case1", "--values", "2", "--strategies", "l", "--max-iters", "1", "--out", str(out)]
        assert main(argv) == 2
        rows = (out / "sweep.csv").read_text(encoding="utf-8").splitlines()
        assert "diverged" in rows[1]

    def test_report_on_empty_log(self, tmp_path):
        log = tmp_path / "iterations.csv"
        log.write_text("", encoding="utf-8")
        assert main(["report", str(log)]) == 0


class TestResolution:
    def test_h_sets_square_cells(self):
        case = resolve_case("case3", h=0.05 * 2**0.5)
        assert (case.nx, case.nz) == (40, 60)

    def test_nx_keeps_aspect_ratio(self):
        case = resolve_case("case3", nx=8)
        assert case.nz == 12

    def test_named_L(self):
        case = resolve_case("case1")
        assert resolve_L("L2", case) == case.L2
        assert resolve_L("0.25", case) == 0.25
        assert resolve_L(None, case) is None

"""Iteration logs, tables and VTK output."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hydroswitch.core.mesh import build_structured
from hydroswitch.core.services.driver import IterationRecord
from hydroswitch.utils.export import (
    ITERATION_COLUMNS,
    read_iterations_csv,
    read_vtk_point_data,
    write_iterations_csv,
    write_table_csv,
    write_vtk,
)
from utils.helpers import format_number, parse_number


@pytest.fixture
def records():
    return [
        IterationRecord(step=1, iteration=1, scheme="L", eta_lin=0.1, eta_LN=0.12, eta_LL=0.05, C_N=0.3, wall_ms=2.5),
        IterationRecord(step=1, iteration=2, scheme="N", eta_lin=1.0 / 3.0, eta_NL=0.0, eff_index=1.2, wall_ms=3.0),
    ]


class TestNumbers:
    def test_blank_for_missing(self):
        assert format_number(None) == ""
        assert format_number(float("nan")) == ""
        assert parse_number("  ") is None

    def test_full_precision(self):
        assert parse_number(format_number(1.0 / 3.0)) == 1.0 / 3.0


class TestIterationsCsv:
    def test_header_and_cells(self, tmp_path, records):
        path = write_iterations_csv(tmp_path / "iterations.csv", records)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == ",".join(ITERATION_COLUMNS)
        assert lines[1].startswith("1,1,L,")
        rows = read_iterations_csv(path)
        assert rows[0]["eta_NL"] is None
        assert rows[1]["eta_lin"] == 1.0 / 3.0
        assert rows[1]["eta_LN"] is None

    def test_without_timings(self, tmp_path, records):
        rows = read_iterations_csv(write_iterations_csv(tmp_path / "it.csv", records, timings=False))
        assert all(row["wall_ms"] is None for row in rows)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("", encoding="utf-8")
        assert read_iterations_csv(path) == []

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("step,iter\n1,1\n", encoding="utf-8")
        with pytest.raises(ValueError):
            read_iterations_csv(path)


def test_table_csv(tmp_path):
    path = write_table_csv(tmp_path / "t.csv", ["strategy", "value", "total"], [{"strategy": "ln", "value": 0.5, "total": None}])
    assert path.read_text(encoding="utf-8").splitlines() == ["strategy,value,total", "ln,0.5,"]


class TestVtk:
    def test_point_data(self, tmp_path, vg_model):
        mesh = build_structured(3, 2)
        psi = np.linspace(-5.0, 0.5, mesh.n_vertices)
        path = write_vtk(tmp_path / "field.vtk", mesh, psi, vg_model, title="test")
        text = path.read_text(encoding="utf-8")
        assert f"POINTS {mesh.n_vertices} double" in text
        assert f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}" in text
        data = read_vtk_point_data(path)
        assert_allclose(data["points"][:, :2], mesh.vertices)
        assert_allclose(data["pressure_head"], psi)
        lo, hi = vg_model.content_bounds
        assert np.all((data["saturation"] >= lo) & (data["saturation"] <= hi))
        assert data["saturation"][-1] == pytest.approx(hi)

    def test_shape_mismatch(self, tmp_path, vg_model):
        with pytest.raises(ValueError):
            write_vtk(tmp_path / "f.vtk", build_structured(2, 2), np.zeros(3), vg_model)

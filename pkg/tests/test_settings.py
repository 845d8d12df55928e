"""Settings file loading and environment overrides."""

import json

import pytest
from pydantic import ValidationError

from hydroswitch.infra.settings import load_settings, reload_settings


@pytest.fixture(autouse=True)
def restore_cache():
    yield
    reload_settings()


def test_missing_file_gives_defaults(tmp_path):
    settings = load_settings(path=tmp_path / "absent.json", force=True)
    assert settings.c_tol == 1.5
    assert settings.max_iters == 500
    assert settings.case2_parameter_column == "case2"
    assert settings.linear_rtol == 1e-12


def test_file_values(tmp_path):
    path = tmp_path / "settings.json"
    payload = {"C_TOL": 2.0, "JOBS": 4, "CASE2_PARAMETER_COLUMN": "case3", "LINEAR_RTOL": 1e-10}
    path.write_text(json.dumps(payload), encoding="utf-8")
    settings = load_settings(path=path, force=True)
    assert settings.c_tol == 2.0
    assert settings.jobs == 4
    assert settings.case2_parameter_column == "case3"
    assert settings.linear_rtol == 1e-10


def test_environment_wins(tmp_path, monkeypatch):
    path = tmp_path / "settings.json"
    path.write_text(json.dumps({"JOBS": 4}), encoding="utf-8")
    monkeypatch.setenv("HYDROSWITCH_JOBS", "3")
    monkeypatch.setenv("HYDROSWITCH_LINEAR_SOLVER", "iterative")
    settings = load_settings(path=path, force=True)
    assert settings.jobs == 3
    assert settings.linear_solver == "iterative"


def test_cached_until_forced(tmp_path):
    first = load_settings(path=tmp_path / "absent.json", force=True)
    assert load_settings() is first


@pytest.mark.parametrize("payload", [{"C_TOL": 1.0}, {"LINEAR_SOLVER": "cg"}, {"JOBS": 0}, {"LINEAR_RTOL": 0.0}])
def test_invalid_values(tmp_path, payload):
    path = tmp_path / "settings.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    with pytest.raises(ValidationError):
        load_settings(path=path, force=True)

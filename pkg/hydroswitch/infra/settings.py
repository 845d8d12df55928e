"""Typed settings loader for HydroSwitch."""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

_DEFAULT_DATA_DIR = Path(__file__).resolve().parents[2] / "data"
_SETTINGS_PATH = _DEFAULT_DATA_DIR / "settings.json"


class SettingsModel(BaseModel):
    log_level: str = Field("INFO", alias="HYDROSWITCH_LOG_LEVEL")
    log_rich: bool = Field(True, alias="HYDROSWITCH_LOG_RICH")
    c_tol: float = Field(1.5, gt=1.0, alias="C_TOL")
    stop_tol: float = Field(1e-7, gt=0.0, alias="STOP_TOL")
    max_iters: int = Field(500, ge=1, alias="MAX_ITERS")
    epsilon_deg_factor: float = Field(1e-4, gt=0.0, alias="EPSILON_DEG_FACTOR")
    divergence_factor: float = Field(1e8, gt=1.0, alias="DIVERGENCE_FACTOR")
    linear_solver: Literal["direct", "iterative"] = Field("direct", alias="LINEAR_SOLVER")
    linear_rtol: float = Field(1e-12, gt=0.0, lt=1.0, alias="LINEAR_RTOL")
    output_dir: str = Field("output", alias="OUTPUT_DIR")
    jobs: int = Field(1, ge=1, alias="JOBS")
    case2_parameter_column: Literal["case2", "case3"] = Field("case2", alias="CASE2_PARAMETER_COLUMN")

    # - populate_by_name: allow using field names when aliases are defined
    # - extra='allow': keep unknown keys instead of forbidding
    model_config = ConfigDict(populate_by_name=True, extra="allow")


_cached_settings: Optional[SettingsModel] = None


def _load_json(path: Path) -> Dict[str, Any]:
    if not path.exists():
        return {}
    with path.open("r", encoding="utf-8") as handle:
        return json.load(handle)


def _apply_environment_overrides(data: Dict[str, Any]) -> Dict[str, Any]:
    overrides = {
        "HYDROSWITCH_LOG_LEVEL": os.getenv("HYDROSWITCH_LOG_LEVEL"),
        "HYDROSWITCH_LOG_RICH": os.getenv("HYDROSWITCH_LOG_RICH"),
        "LINEAR_SOLVER": os.getenv("HYDROSWITCH_LINEAR_SOLVER"),
        "OUTPUT_DIR": os.getenv("HYDROSWITCH_OUTPUT_DIR"),
        "JOBS": os.getenv("HYDROSWITCH_JOBS"),
    }
    return {**data, **{k: v for k, v in overrides.items() if v is not None}}


def load_settings(*, path: Path = _SETTINGS_PATH, force: bool = False) -> SettingsModel:
    global _cached_settings
    if _cached_settings is not None and not force:
        return _cached_settings

    data = _load_json(path)
    data = _apply_environment_overrides(data)
    _cached_settings = SettingsModel.model_validate(data)
    return _cached_settings


def reload_settings(*, path: Path = _SETTINGS_PATH) -> SettingsModel:
    return load_settings(path=path, force=True)

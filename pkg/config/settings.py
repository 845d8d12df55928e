"""
Configuration settings for HydroSwitch
Handles settings.json variables, solver defaults, and output locations
"""
import os
from pathlib import Path
from typing import Optional

from hydroswitch.infra.settings import SettingsModel, load_settings
from utils.logger import get_logger

# settings.json lives in the project data dir; it is optional
logger = get_logger(__name__)
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
USER_DATA_DIR = os.path.join(BASE_DIR, 'data')
SETTINGS_PATH = os.path.join(USER_DATA_DIR, 'settings.json')


def safe_int(val, default):
    try:
        return int(val)
    except (TypeError, ValueError):
        return default


def safe_float(val, default):
    try:
        return float(val)
    except (TypeError, ValueError):
        return default


class Settings:
    """Centralized configuration management loaded from settings.json"""
    _settings = {}
    _model: Optional[SettingsModel] = None

    @classmethod
    def load(cls, *, force: bool = False):
        model = load_settings(path=Path(SETTINGS_PATH), force=force)
        cls._model = model
        cls._settings = model.model_dump(by_alias=True, exclude_none=True)
        for key, value in cls._settings.items():
            setattr(cls, key, value)

    @classmethod
    def get(cls, key, default=None):
        return cls._settings.get(key, default)

    @classmethod
    def reload(cls):
        cls.initialize(force=True)

    @classmethod
    def model(cls) -> SettingsModel:
        if cls._model is None:
            cls.load()
        return cls._model  # type: ignore[return-value]

    # Solver defaults (populated in initialize)
    C_TOL: float = 1.5
    STOP_TOL: float = 1e-7
    MAX_ITERS: int = 500
    EPSILON_DEG_FACTOR: float = 1e-4
    DIVERGENCE_FACTOR: float = 1e8
    LINEAR_SOLVER: str = "direct"
    LINEAR_RTOL: float = 1e-12
    CASE2_PARAMETER_COLUMN: str = "case2"

    # Output
    OUTPUT_DIR: str = ""
    JOBS: int = 1

    @classmethod
    def initialize(cls, *, force: bool = False) -> None:
        cls.load(force=force)
        cls.C_TOL = safe_float(cls.get('C_TOL'), 1.5)
        cls.STOP_TOL = safe_float(cls.get('STOP_TOL'), 1e-7)
        cls.MAX_ITERS = safe_int(cls.get('MAX_ITERS'), 500)
        cls.EPSILON_DEG_FACTOR = safe_float(cls.get('EPSILON_DEG_FACTOR'), 1e-4)
        cls.DIVERGENCE_FACTOR = safe_float(cls.get('DIVERGENCE_FACTOR'), 1e8)
        cls.LINEAR_SOLVER = str(cls.get('LINEAR_SOLVER', "direct"))
        cls.LINEAR_RTOL = safe_float(cls.get('LINEAR_RTOL'), 1e-12)
        cls.CASE2_PARAMETER_COLUMN = str(cls.get('CASE2_PARAMETER_COLUMN', "case2"))
        cls.JOBS = max(1, safe_int(cls.get('JOBS'), 1))
        output_dir = str(cls.get('OUTPUT_DIR', "output"))
        cls.OUTPUT_DIR = output_dir if os.path.isabs(output_dir) else os.path.join(BASE_DIR, output_dir)
        if not os.path.exists(SETTINGS_PATH):
            logger.debug(f"No settings file at {SETTINGS_PATH}; using defaults")


Settings.initialize()

"""Extremum seeking by relay control with monitoring functions."""

from .config import ConfigError, ScenarioConfig, apply_overrides, load_config, validate
from .scenario import compute_metrics, emit_csv, preset_cart, preset_example1, read_csv
from .simcore import SimTrace, TrajectoryDiverged, run_simulation

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "SimTrace",
    "TrajectoryDiverged",
    "apply_overrides",
    "compute_metrics",
    "emit_csv",
    "load_config",
    "preset_cart",
    "preset_example1",
    "read_csv",
    "run_simulation",
    "validate",
]

"""Scenario files, built-in presets, runs, sweeps and unit conversion."""
from .config import (
    AxisSpec,
    ConfigParseError,
    ConfigValidationError,
    InitialSpec,
    NoiseSpec,
    Scenario,
    ScenarioError,
    SweepSpec,
    UnknownKeyError,
    default_dt,
    load_scenario,
    parse_config,
    scenario_from_mapping,
)
from .presets import PRESETS, preset_summary
from .runner import (
    CSV_HEADER,
    NoiseRunResult,
    RunResult,
    health_issues,
    read_csv_columns,
    run_noise_ensemble,
    run_scenario,
    write_trajectory_csv,
)
from .sweep import SweepResult, run_sweep, write_sweep_csv
from .units import PhysicalTime, angular_mhz, to_physical_units

__all__ = [
    "AxisSpec",
    "ConfigParseError",
    "ConfigValidationError",
    "InitialSpec",
    "NoiseSpec",
    "Scenario",
    "ScenarioError",
    "SweepSpec",
    "UnknownKeyError",
    "default_dt",
    "load_scenario",
    "parse_config",
    "scenario_from_mapping",
    "PRESETS",
    "preset_summary",
    "CSV_HEADER",
    "NoiseRunResult",
    "RunResult",
    "health_issues",
    "read_csv_columns",
    "run_noise_ensemble",
    "run_scenario",
    "write_trajectory_csv",
    "SweepResult",
    "run_sweep",
    "write_sweep_csv",
    "PhysicalTime",
    "angular_mhz",
    "to_physical_units",
]

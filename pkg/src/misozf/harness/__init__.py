"""Scenario configuration, Monte-Carlo sweeps, presets and CSV output."""

from .config import (
    CovarianceFileModel,
    ScaledIdentityModel,
    ScenarioConfig,
    expand_pilot_sweep,
    format_config,
    load_config,
    parse_config,
)
from .io import read_csv, write_csv, write_diagnostics
from .presets import PRESET_NAMES, figure_preset, quick
from .sweep import SweepResult, SweepRow, TrialResult, mse_oracle_table, run_power_sweep, run_trial

__all__ = [
    "CovarianceFileModel",
    "ScaledIdentityModel",
    "ScenarioConfig",
    "expand_pilot_sweep",
    "format_config",
    "load_config",
    "parse_config",
    "read_csv",
    "write_csv",
    "write_diagnostics",
    "PRESET_NAMES",
    "figure_preset",
    "quick",
    "SweepResult",
    "SweepRow",
    "TrialResult",
    "mse_oracle_table",
    "run_power_sweep",
    "run_trial",
]

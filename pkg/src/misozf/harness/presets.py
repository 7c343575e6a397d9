"""Scenario presets mirroring the published figures.

All presets run on synthetic urban-micro covariances (unit-trace unless
noted), so they reproduce the qualitative shape of each figure rather than
its point values.
"""

from __future__ import annotations

from dataclasses import replace

from ..channel_model import UmiModelParams
from ..errors import UnknownPreset
from .config import ScenarioConfig

__all__ = ["PRESET_NAMES", "POWER_GRID_DB", "figure_preset", "quick"]

POWER_GRID_DB = tuple(float(p) for p in range(-20, 41, 5))
QUICK_N_COV = 20
QUICK_N_CH = 50
PILOT_LENGTHS = (32, 31, 16, 8, 3)


def _base(**kw) -> ScenarioConfig:
    args = dict(M=32, K=5, T_dl=32, power_grid_db=POWER_GRID_DB, channel_model=UmiModelParams())
    args.update(kw)
    return ScenarioConfig(**args)


_PRESETS = {
    # MSE and sum rate, contamination-free training
    "fig1": lambda: _base(T_dl=32, estimators=("LS", "LMMSE"), precoders=("ZF", "MF")),
    "fig2": lambda: _base(T_dl=32, estimators=("LS", "LMMSE"), precoders=("ZF", "MF")),
    # same with half as many pilots as antennas
    "fig3": lambda: _base(T_dl=16, estimators=("LS", "LMMSE"), precoders=("ZF", "MF")),
    "fig4": lambda: _base(T_dl=16, estimators=("LS", "LMMSE"), precoders=("ZF", "MF")),
    # ZF only, one curve per pilot length
    "fig5": lambda: _base(T_dl=32, estimators=("LMMSE",), precoders=("ZF",), pilot_sweep=PILOT_LENGTHS),
    "fig6": lambda: _base(T_dl=32, estimators=("LS",), precoders=("ZF",), pilot_sweep=PILOT_LENGTHS),
    # noisy feedback at 10 dB
    "fig7": lambda: _base(T_dl=32, estimators=("LS", "LMMSE"), precoders=("ZF",),
                          feedback_power_db=10.0, pilot_sweep=(32, 16)),
    # larger array, users dropped in a 250 m cell
    "fig8": lambda: _base(M=64, K=10, T_dl=32, estimators=("LS", "LMMSE"), precoders=("ZF", "MF"),
                          channel_model=UmiModelParams(pathloss_mode="distance_based")),
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def figure_preset(name: str) -> ScenarioConfig:
    try:
        return _PRESETS[name]()
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}") from None


def quick(cfg: ScenarioConfig) -> ScenarioConfig:
    """Desk-scale variant with 20 covariance and 50 channel draws."""
    return replace(cfg, n_cov=QUICK_N_COV, n_ch=QUICK_N_CH)

"""Scenario configuration and its flat ``key = value`` text format.

Example::

    # Fig. 4 style scenario
    M = 32
    K = 5
    T_dl = 16
    power_grid_db = -20..40 step 5
    estimators = LS, LMMSE
    channel.model = umi
    channel.per_cluster_angle_spread = 10deg

Lists are comma-separated, ``a..b step s`` expands to an inclusive range,
angles accept a ``deg`` suffix, and unknown keys are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Union

from ..channel_model import PATHLOSS_MODES, UmiModelParams
from ..errors import ConfigParseError, ConfigValidationError
from ..training import FEEDBACK_MODELS, PILOT_KINDS

__all__ = [
    "ESTIMATORS",
    "PRECODERS",
    "ScaledIdentityModel",
    "CovarianceFileModel",
    "ScenarioConfig",
    "parse_config",
    "load_config",
    "format_config",
    "expand_pilot_sweep",
]

ESTIMATORS = ("Genie", "LMMSE", "LS")
PRECODERS = ("MF", "ZF")


@dataclass(frozen=True)
class ScaledIdentityModel:
    scale: float = 1.0


@dataclass(frozen=True)
class CovarianceFileModel:
    path: str


ChannelModel = Union[UmiModelParams, ScaledIdentityModel, CovarianceFileModel]


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one Monte-Carlo power sweep.

    ``training_sigma2`` overrides the training-noise variance (``0`` gives
    noiseless observations and noiseless-limit estimators); the data-phase
    noise stays ``1/P_dl``. ``pilot_sweep`` lists alternative ``T_dl``
    values for presets that compare pilot lengths; see
    :func:`expand_pilot_sweep`.
    """

    M: int
    K: int
    T_dl: int
    power_grid_db: tuple[float, ...]
    T_coh: int = 200
    feedback_power_db: float | None = None
    feedback_model: str = "scaled"
    n_cov: int = 100
    n_ch: int = 200
    estimators: tuple[str, ...] = ("Genie", "LMMSE", "LS")
    precoders: tuple[str, ...] = ("MF", "ZF")
    channel_model: ChannelModel = field(default_factory=UmiModelParams)
    spacing: float = 0.5
    pilot_kind: str = "dft_subset"
    master_seed: int = 0
    training_sigma2: float | None = None
    pilot_sweep: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "power_grid_db", tuple(float(p) for p in self.power_grid_db))
        # Genie is always evaluated as the reference curve
        ests = set(self.estimators) | {"Genie"}
        object.__setattr__(self, "estimators", tuple(sorted(ests)))
        object.__setattr__(self, "precoders", tuple(sorted(set(self.precoders))))
        object.__setattr__(self, "pilot_sweep", tuple(int(t) for t in self.pilot_sweep))
        self._validate()

    def _validate(self):
        def fail(msg):
            raise ConfigValidationError(msg)

        for name in ("M", "K", "T_dl", "T_coh", "n_cov", "n_ch"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                fail(f"{name} must be a positive integer, got {v!r}")
        if self.K > self.M:
            fail(f"K ≤ M violated (K={self.K}, M={self.M})")
        for t in (self.T_dl,) + self.pilot_sweep:
            if t < 1:
                fail(f"T_dl must be positive, got {t}")
            if t > self.M:
                fail(f"T_dl ≤ M violated (T_dl={t}, M={self.M})")
            if t >= self.T_coh:
                fail(f"prelog: T_dl < T_coh violated (T_dl={t}, T_coh={self.T_coh})")
        if not self.power_grid_db:
            fail("power grid must be nonempty")
        if not all(math.isfinite(p) for p in self.power_grid_db):
            fail("power grid entries must be finite")
        if len(set(self.power_grid_db)) != len(self.power_grid_db):
            fail("power grid entries must be distinct")
        bad = set(self.estimators) - set(ESTIMATORS)
        if bad:
            fail(f"unknown estimators {sorted(bad)}; allowed {ESTIMATORS}")
        bad = set(self.precoders) - set(PRECODERS)
        if bad or not self.precoders:
            fail(f"precoders must be a nonempty subset of {PRECODERS}")
        if self.feedback_model not in FEEDBACK_MODELS:
            fail(f"feedback_model must be one of {FEEDBACK_MODELS}")
        if self.pilot_kind not in PILOT_KINDS:
            fail(f"pilot_kind must be one of {PILOT_KINDS}")
        if not self.spacing > 0:
            fail("channel.spacing must be positive")
        if not 0 <= self.master_seed < 2**64:
            fail("master_seed must be an unsigned 64-bit integer")
        if self.training_sigma2 is not None and self.training_sigma2 < 0:
            fail("training_sigma2 must be >= 0")
        if isinstance(self.channel_model, ScaledIdentityModel) and not self.channel_model.scale > 0:
            fail("channel.scale must be positive")

    def with_t_dl(self, t_dl: int) -> "ScenarioConfig":
        return replace(self, T_dl=t_dl, pilot_sweep=())


def expand_pilot_sweep(cfg: ScenarioConfig) -> list[ScenarioConfig]:
    """One config per pilot length; a config without a sweep maps to itself."""
    if not cfg.pilot_sweep:
        return [cfg]
    return [cfg.with_t_dl(t) for t in cfg.pilot_sweep]


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

_TOP_INT = {"M", "K", "T_dl", "T_coh", "n_cov", "n_ch", "master_seed"}
_TOP_FLOAT = {"feedback_power_db", "training_sigma2"}
_TOP_STR = {"feedback_model", "pilot_kind"}
_TOP_LIST = {"power_grid_db", "estimators", "precoders", "pilot_sweep"}
_CHANNEL_KEYS = {
    "model", "spacing", "num_paths", "num_rays", "cluster_power_decay",
    "per_cluster_angle_spread", "azimuth_range", "pathloss_mode",
    "pathloss_exponent", "cell_radius_m", "min_distance_m", "scale", "path",
}
_UMI_KEYS = {f.name for f in fields(UmiModelParams)}


def _parse_int(text, line, key):
    try:
        return int(text, 0)
    except ValueError:
        raise ConfigParseError(f"expected an integer, got {text!r}", line, key) from None


def _parse_float(text, line, key, angle=False):
    t = text.strip()
    factor = 1.0
    if angle and t.endswith("deg"):
        t, factor = t[:-3], math.pi / 180.0
    try:
        return float(t) * factor
    except ValueError:
        raise ConfigParseError(f"expected a number, got {text!r}", line, key) from None


def _parse_power_grid(text, line, key):
    t = text.strip()
    if ".." in t:
        try:
            span, _, step = t.partition("step")
            lo, hi = span.split("..")
            lo, hi = float(lo), float(hi)
            step = float(step) if step.strip() else 1.0
        except ValueError:
            raise ConfigParseError(f"malformed range {text!r}; expected 'a..b step s'", line, key) from None
        if step <= 0 or hi < lo:
            raise ConfigParseError(f"range {text!r} is empty or has non-positive step", line, key)
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return tuple(lo + i * step for i in range(n))
    return tuple(_parse_float(p, line, key) for p in _split_list(t))


def _split_list(text):
    return [p.strip() for p in text.split(",") if p.strip()]


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    top: dict = {}
    chan: dict = {}
    seen: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise ConfigParseError(f"expected 'key = value' in {source}", lineno)
        key, _, value = line.partition(sep)
        key, value = key.strip(), value.strip()
        if key in seen:
            raise ConfigParseError(f"duplicate key (first set on line {seen[key]})", lineno, key)
        seen[key] = lineno
        if key.startswith("channel."):
            sub = key[len("channel."):]
            if sub not in _CHANNEL_KEYS:
                raise ConfigParseError("unknown channel parameter", lineno, key)
            chan[sub] = (value, lineno)
        elif key in _TOP_INT:
            top[key] = _parse_int(value, lineno, key)
        elif key in _TOP_FLOAT:
            top[key] = None if value.lower() == "none" else _parse_float(value, lineno, key)
        elif key in _TOP_STR:
            top[key] = value
        elif key == "power_grid_db":
            top[key] = _parse_power_grid(value, lineno, key)
        elif key in ("estimators", "precoders"):
            top[key] = tuple(_split_list(value))
        elif key == "pilot_sweep":
            top[key] = tuple(_parse_int(v, lineno, key) for v in _split_list(value))
        else:
            raise ConfigParseError("unknown key", lineno, key)

    for required in ("M", "K", "T_dl", "power_grid_db"):
        if required not in top:
            raise ConfigParseError(f"missing required key in {source}", None, required)

    spacing = 0.5
    if "spacing" in chan:
        value, lineno = chan.pop("spacing")
        spacing = _parse_float(value, lineno, "channel.spacing")
    model_name, model_line = chan.pop("model", ("umi", None))
    top["channel_model"] = _build_channel_model(model_name.strip(), model_line, chan)
    top["spacing"] = spacing
    try:
        return ScenarioConfig(**top)
    except TypeError as exc:  # pragma: no cover - guarded by the key tables above
        raise ConfigParseError(str(exc)) from None


def _build_channel_model(name, name_line, chan):
    def reject_extra(allowed):
        for k, (_, ln) in chan.items():
            if k not in allowed:
                raise ConfigValidationError(f"line {ln}: channel.{k} does not apply to channel.model = {name}")

    if name == "umi":
        reject_extra(_UMI_KEYS)
        kw = {}
        for k, (v, ln) in chan.items():
            key = f"channel.{k}"
            if k in ("num_paths", "num_rays"):
                kw[k] = _parse_int(v, ln, key)
            elif k == "pathloss_mode":
                if v not in PATHLOSS_MODES:
                    raise ConfigParseError(f"expected one of {PATHLOSS_MODES}", ln, key)
                kw[k] = v
            elif k == "azimuth_range":
                parts = _split_list(v)
                if len(parts) != 2:
                    raise ConfigParseError("expected two comma-separated angles", ln, key)
                kw[k] = tuple(_parse_float(p, ln, key, angle=True) for p in parts)
            else:
                kw[k] = _parse_float(v, ln, key, angle=(k == "per_cluster_angle_spread"))
        try:
            return UmiModelParams(**kw)
        except ValueError as exc:
            raise ConfigValidationError(f"channel: {exc}") from None
    if name == "scaled_identity":
        reject_extra({"scale"})
        if "scale" in chan:
            v, ln = chan["scale"]
            return ScaledIdentityModel(_parse_float(v, ln, "channel.scale"))
        return ScaledIdentityModel()
    if name == "file":
        reject_extra({"path"})
        if "path" not in chan:
            raise ConfigParseError("channel.model = file needs channel.path", name_line, "channel.path")
        return CovarianceFileModel(chan["path"][0])
    raise ConfigParseError(f"unknown channel model {name!r} (umi, scaled_identity, file)", name_line, "channel.model")


def load_config(path) -> ScenarioConfig:
    """Read and validate a scenario file.

    Relative ``channel.path`` entries are resolved against the file's folder.
    """
    path = Path(path)
    cfg = parse_config(path.read_text(), source=str(path))
    if isinstance(cfg.channel_model, CovarianceFileModel):
        p = Path(cfg.channel_model.path)
        if not p.is_absolute():
            cfg = replace(cfg, channel_model=CovarianceFileModel(str(path.parent / p)))
    return cfg


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_config(cfg: ScenarioConfig) -> str:
    """Serialize a config so that ``parse_config(format_config(c)) == c``."""
    lines = [
        f"M = {cfg.M}",
        f"K = {cfg.K}",
        f"T_dl = {cfg.T_dl}",
        f"T_coh = {cfg.T_coh}",
        "power_grid_db = " + ", ".join(_fmt(p) for p in cfg.power_grid_db),
        f"n_cov = {cfg.n_cov}",
        f"n_ch = {cfg.n_ch}",
        "estimators = " + ", ".join(cfg.estimators),
        "precoders = " + ", ".join(cfg.precoders),
        f"pilot_kind = {cfg.pilot_kind}",
        f"master_seed = {cfg.master_seed}",
        f"feedback_model = {cfg.feedback_model}",
    ]
    if cfg.feedback_power_db is not None:
        lines.append(f"feedback_power_db = {_fmt(cfg.feedback_power_db)}")
    if cfg.training_sigma2 is not None:
        lines.append(f"training_sigma2 = {_fmt(cfg.training_sigma2)}")
    if cfg.pilot_sweep:
        lines.append("pilot_sweep = " + ", ".join(str(t) for t in cfg.pilot_sweep))
    lines.append(f"channel.spacing = {_fmt(cfg.spacing)}")
    cm = cfg.channel_model
    if isinstance(cm, UmiModelParams):
        lines.append("channel.model = umi")
        for f in fields(UmiModelParams):
            v = getattr(cm, f.name)
            if isinstance(v, tuple):
                v = ", ".join(_fmt(x) for x in v)
            else:
                v = _fmt(v)
            lines.append(f"channel.{f.name} = {v}")
    elif isinstance(cm, ScaledIdentityModel):
        lines += ["channel.model = scaled_identity", f"channel.scale = {_fmt(cm.scale)}"]
    else:
        lines += ["channel.model = file", f"channel.path = {cm.path}"]
    return "\n".join(lines) + "\n"

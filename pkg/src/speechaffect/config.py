"""Declarative TOML run configuration with strict key checking and a resolved echo."""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import InputError


@dataclass
class FeaturesSection:
    frame_len_ms: float = 25.0
    hop_ms: float = 10.0
    window: str = "hann"
    f0_min: float = 60.0
    f0_max: float = 500.0
    voicing_threshold: float = 0.45


@dataclass
class ProbeSection:
    reduction: str = "mean"
    reg: float = 1e-6
    min_rows: int = 50


@dataclass
class AsrSection:
    smooth_bleu: bool = False
    per_utterance_mean: bool = False


@dataclass
class FadSection:
    shrinkage: float = 0.0
    normalized: bool = False


@dataclass
class SemislSection:
    audio_features: str = ""
    text_features: str = ""
    gold_labels: str = ""
    acoustic_labels: str = ""
    linguistic_labels: list[str] = field(default_factory=list)
    valid_frac: float = 0.2
    labeled_frac: float = 0.3
    max_iters: int = 40
    patience: int = 2
    removal_rate: float = 0.2
    threshold: float = 0.5
    learning_rate: float = 0.1
    epochs: int = 300
    l2: float = 1e-4
    baselines: list[str] = field(default_factory=list)


@dataclass
class RunConfig:
    seed: int = 0
    workers: int = 0
    features: FeaturesSection = field(default_factory=FeaturesSection)
    probe: ProbeSection = field(default_factory=ProbeSection)
    asr: AsrSection = field(default_factory=AsrSection)
    fad: FadSection = field(default_factory=FadSection)
    semisl: SemislSection = field(default_factory=SemislSection)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())


def _coerce(name: str, value: Any, default: Any) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise InputError(f"{name}: expected a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise InputError(f"{name}: expected an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InputError(f"{name}: expected a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise InputError(f"{name}: expected a string")
        return value
    if isinstance(default, list):
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise InputError(f"{name}: expected a list of strings")
        return list(value)
    raise InputError(f"{name}: unsupported value")


def _fill(obj, data: Mapping[str, Any], prefix: str = ""):
    known = {f.name: f for f in dataclasses.fields(obj)}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if key not in known:
            raise InputError(f"unknown config key {name!r}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            if not isinstance(value, Mapping):
                raise InputError(f"{name}: expected a table")
            _fill(current, value, f"{name}.")
        else:
            setattr(obj, key, _coerce(name, value, current))
    return obj


def config_from_dict(data: Mapping[str, Any]) -> RunConfig:
    return _fill(RunConfig(), data)


def apply_overrides(cfg: RunConfig, overrides: Mapping[str, Any]) -> RunConfig:
    """Dotted-key overrides, e.g. ``{"fad.shrinkage": 0.1}``; ``None`` values are skipped."""
    for dotted, value in overrides.items():
        if value is None:
            continue
        *path, key = dotted.split(".")
        data: dict = {key: value}
        for part in reversed(path):
            data = {part: data}
        _fill(cfg, data)
    return cfg


def load_config(path: str | Path | None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise InputError(f"no such file: {path}")
        try:
            data = tomllib.loads(path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise InputError(f"{path}: {exc}") from exc
        cfg = config_from_dict(data)
        base = path.parent.resolve()
        sec = cfg.semisl
        for attr in ("audio_features", "text_features", "gold_labels", "acoustic_labels"):
            value = getattr(sec, attr)
            if value and not Path(value).is_absolute():
                setattr(sec, attr, str(base / value))
        sec.linguistic_labels = [
            p if Path(p).is_absolute() else str(base / p) for p in sec.linguistic_labels
        ]
    return apply_overrides(cfg, overrides or {})

"""Experiment configuration.

A config is one JSON object. Every section is optional and falls back to the
defaults below; unknown keys anywhere are rejected. See README.md for the
full schema.
"""

from __future__ import annotations

import dataclasses
import json
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from sensorprint.device import (DEFAULT_USER_AGENTS, NoiseSpec, ParameterRanges,
                                RestDetection, synthetic_user_agents)

EXPERIMENTS = ("audio-l2", "audio-mle", "stealth", "msz-sweep", "accel-entropy", "six-param")


class ConfigError(ValueError):
    """Aggregated validation failure; ``errors`` lists every problem found."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid config:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class PopulationConfig:
    sensitivity: tuple[float, float] = (0.99, 1.04)
    offset: tuple[float, float] = (-0.5, 0.5)
    tolerance_db: float = 2.0
    h2: tuple[float, float] = (0.02, 0.12)
    h3: tuple[float, float] = (0.01, 0.06)
    knot_spacing_hz: float = 50.0
    max_knot_hz: float = 4000.0
    distribution: str = "uniform"
    # int -> synthetic catalog of that size; list of [ua, weight] pairs -> as given
    user_agents: Any = None
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def ranges(self) -> ParameterRanges:
        if self.user_agents is None:
            agents = DEFAULT_USER_AGENTS
        elif isinstance(self.user_agents, int):
            agents = synthetic_user_agents(self.user_agents)
        else:
            agents = tuple((str(ua), float(w)) for ua, w in self.user_agents)
        return ParameterRanges(self.sensitivity, self.offset, self.tolerance_db, self.h2, self.h3,
                               self.knot_spacing_hz, self.max_knot_hz, self.distribution,
                               agents, self.noise)


@dataclass(frozen=True)
class AudioConfig:
    plan: Any = "seven"  # "seven", "thirteen" or an explicit list of Hz
    harmonics: tuple[int, ...] = (1, 2)
    locations: int = 3
    runs: int = 1
    location_gain_db: float = 0.1
    # per-frequency jitter std (dB), log-uniform over this range
    noise_std_db: tuple[float, float] = (0.0, 0.0)
    amplitude: float = 1.0
    playback_seconds: float = 3.0
    window_seconds: float = 1.0
    sample_rate: float = 8000.0
    train_location: int = 0
    omit_location: int | None = None
    variants: tuple[str, ...] = ("A", "B", "B'", "B''")
    stealth_bases: tuple[float, ...] = (460.0, 740.0, 1060.0)
    knn_k: int = 1
    folds: int = 10


@dataclass(frozen=True)
class GridConfig:
    width_o: float = 0.045
    width_s: float = 0.0037
    origin_offsets: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75)


@dataclass(frozen=True)
class SixParamConfig:
    orientations: int = 8
    sets: int = 5
    knn_k: int = 1
    folds: int = 10
    learning_rate: float = 1e-3
    max_iterations: int = 10_000
    tolerance: float = 1e-12


@dataclass(frozen=True)
class AccelConfig:
    # int, or mapping multiplicity -> device weight/count
    submissions: Any = 2
    duration: float = 2.0
    rate: float = 50.0
    tilt_sigma: float = 0.0
    offset_drift: float = 0.0
    detection: RestDetection = field(default_factory=RestDetection)
    m_sz: float = 300.0
    m_sz_values: tuple[float, ...] = (1.0, 10.0, 100.0, 300.0, 1000.0, 10000.0)
    filter_percentile: float = 95.0
    replicates: int = 1
    grid: GridConfig = field(default_factory=GridConfig)
    six: SixParamConfig = field(default_factory=SixParamConfig)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "accel-entropy"
    seed: int = 0
    devices: int = 16
    population: PopulationConfig = field(default_factory=PopulationConfig)
    audio: AudioConfig = field(default_factory=AudioConfig)
    accel: AccelConfig = field(default_factory=AccelConfig)

    @classmethod
    def from_dict(cls, data: dict, seed: int | None = None) -> "ExperimentConfig":
        errors: list[str] = []
        cfg = _build(cls, data, "", errors)
        if errors:
            raise ConfigError(errors)
        if seed is not None:
            cfg = dataclasses.replace(cfg, seed=seed)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path, seed: int | None = None) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()), seed)

    def to_dict(self) -> dict:
        return _plain(self)

    def validate(self) -> None:
        e = []
        if self.experiment not in EXPERIMENTS:
            e.append(f"experiment: unknown {self.experiment!r}; choose one of {', '.join(EXPERIMENTS)}")
        if not 0 <= self.seed < 2 ** 64:
            e.append("seed: must be an unsigned 64-bit integer")
        if self.devices < 1:
            e.append("devices: must be >= 1")
        try:
            self.population.ranges().validate()
        except ValueError as exc:
            e.append(f"population: {exc}")
        a = self.audio
        if a.locations < 1 or a.runs < 1:
            e.append("audio: locations and runs must be >= 1")
        if not 0 <= a.train_location < a.locations:
            e.append("audio.train_location: out of range")
        if a.omit_location is not None and not 0 <= a.omit_location < a.locations:
            e.append("audio.omit_location: out of range")
        if a.noise_std_db[0] < 0 or a.noise_std_db[0] > a.noise_std_db[1]:
            e.append("audio.noise_std_db: need 0 <= min <= max")
        if a.window_seconds <= 0 or a.window_seconds > a.playback_seconds:
            e.append("audio.window_seconds: must be positive and <= playback_seconds")
        if a.amplitude <= 0:
            e.append("audio.amplitude: must be positive")
        if a.knn_k < 1 or a.folds < 2:
            e.append("audio: knn_k >= 1 and folds >= 2 required")
        if self.experiment == "audio-mle" and a.runs < 3:
            e.append("audio.runs: MLE needs >= 2 training runs plus one test run")
        try:
            from sensorprint.audio import check_stealth_bases
            check_stealth_bases(a.stealth_bases, (2, 3), a.sample_rate)
        except ValueError as exc:
            e.append(f"audio.stealth_bases: {exc}")
        for v in a.variants:
            if v not in ("A", "B", "B'", "B''"):
                e.append(f"audio.variants: unknown variant {v!r}")
        c = self.accel
        if c.duration <= 0 or c.rate <= 0:
            e.append("accel: duration and rate must be positive")
        if c.tilt_sigma < 0 or c.offset_drift < 0:
            e.append("accel: tilt_sigma and offset_drift must be non-negative")
        if c.m_sz < 0 or any(m < 0 for m in c.m_sz_values):
            e.append("accel: m_sz values must be non-negative")
        if not 0 < c.filter_percentile <= 100:
            e.append("accel.filter_percentile: must be in (0, 100]")
        if c.replicates < 1:
            e.append("accel.replicates: must be >= 1")
        if c.grid.width_o <= 0 or c.grid.width_s <= 0:
            e.append("accel.grid: widths must be positive")
        if any(abs(o) > 1 for o in c.grid.origin_offsets):
            e.append("accel.grid.origin_offsets: must lie within one cell width")
        if c.six.orientations < 6:
            e.append("accel.six.orientations: need >= 6")
        try:
            from sensorprint.device import submission_counts
            submission_counts(self.devices, c.submissions)
        except (ValueError, TypeError) as exc:
            e.append(f"accel.submissions: {exc}")
        if e:
            raise ConfigError(e)


def _build(cls, data, path: str, errors: list[str]):
    if not isinstance(data, dict):
        errors.append(f"{path or 'config'}: expected an object")
        return cls()
    hints = typing.get_type_hints(cls)
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        where = f"{path}.{key}" if path else key
        if key not in known:
            errors.append(f"{where}: unknown key")
            continue
        default = _default(known[key])
        if dataclasses.is_dataclass(default):
            kwargs[key] = _build(type(default), value, where, errors)
            continue
        try:
            kwargs[key] = _coerce(hints[key], value, key)
        except (TypeError, ValueError) as exc:
            errors.append(f"{where}: {exc}")
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        errors.append(f"{path or 'config'}: {exc}")
        return cls()


def _default(f: dataclasses.Field):
    if f.default is not dataclasses.MISSING:
        return f.default
    if f.default_factory is not dataclasses.MISSING:
        return f.default_factory()
    return None


def _coerce(hint, value, key):
    if key == "submissions" and isinstance(value, dict):
        return {int(k): float(v) for k, v in value.items()}
    if key == "user_agents" and isinstance(value, list):
        return tuple((str(ua), float(w)) for ua, w in value)
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if value is None:
        if type(None) in args or hint is Any:
            return None
        raise TypeError("must not be null")
    if hint is Any:
        return tuple(value) if isinstance(value, list) else value
    if origin is tuple:
        if not isinstance(value, list):
            raise TypeError("expected a list")
        elem = args[0]
        return tuple(_scalar(elem, v) for v in value)
    if origin in (typing.Union, types.UnionType):
        inner = [a for a in args if a is not type(None)][0]
        return _scalar(inner, value)
    return _scalar(hint, value)


def _scalar(tp, value):
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError(f"expected a number, got {value!r}")
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError(f"expected an integer, got {value!r}")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise TypeError(f"expected a string, got {value!r}")
        return value
    return value


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (tuple, list)):
        return [_plain(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    return obj

"""Experiment configuration: dataclass sections loaded from JSON with strict keys."""
from __future__ import annotations

import dataclasses
import enum
import json
from dataclasses import dataclass, field
from typing import Any

from .controller import ControllerConfig, Mode
from .scoring import MatchConfig, ScoreWeights


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LearnerParams:
    """Synthetic learner. Skill is per note in [0, 1]; reliance accrues with opacity exposure."""
    init_skill_novice: float = 0.25
    init_skill_experienced: float = 0.45
    init_skill_participant_sd: float = 0.08
    init_skill_note_sd: float = 0.10
    experienced_fraction: float = 0.5
    learning_rate: float = 0.12
    engagement_cost: float = 0.6
    guidance_gain: float = 0.35
    reliance_gain: float = 0.015
    dependence: float = 1.0
    recall_masking: float = 0.5
    emit_floor: float = 0.75
    pitch_floor: float = 0.2
    timing_sd_ms: float = 70.0
    timing_skill_gain: float = 0.6
    finger_slip_prob: float = 0.5
    extra_press_rate: float = 1.0
    retention_decay: float = 0.97
    motion_noise_m: float = 0.003

    def __post_init__(self):
        unit = ("init_skill_novice", "init_skill_experienced", "experienced_fraction", "engagement_cost",
                "recall_masking", "emit_floor", "pitch_floor", "timing_skill_gain", "finger_slip_prob",
                "retention_decay")
        for name in unit:
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"learner.{name} must lie in [0, 1]")
        if not 0.0 < self.learning_rate < 1.0:
            raise ConfigError("learner.learning_rate must lie in (0, 1)")
        for name in ("init_skill_participant_sd", "init_skill_note_sd", "guidance_gain", "reliance_gain",
                     "dependence", "extra_press_rate", "motion_noise_m"):
            if getattr(self, name) < 0:
                raise ConfigError(f"learner.{name} must be >= 0")
        if not self.timing_sd_ms > 0:
            raise ConfigError("learner.timing_sd_ms must be > 0")


LATIN_ROWS = ("SA/DB", "SB/DA", "DA/SB", "DB/SA")


@dataclass(frozen=True)
class ProtocolConfig:
    participants: int = 30
    loops_per_segment: int = 10
    trials_per_test: int = 2
    segments: tuple = ("Phrase1", "Phrase2", "Full")
    countdown_ms: float = 2000.0
    retention_gap_ms: float = 600_000.0
    block_break_ms: float = 120_000.0
    latin_rows: tuple = LATIN_ROWS
    melodies: dict = field(default_factory=lambda: {"A": "melody_a", "B": "melody_b"})
    record_frames: bool = True
    record_motion: bool = True
    motion_trials: str = "best"  # "best" or "all"
    motion_tail_ms: float = 500.0

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "latin_rows", tuple(self.latin_rows))
        if self.participants < 1:
            raise ConfigError("protocol.participants must be >= 1")
        if self.motion_trials not in ("best", "all"):
            raise ConfigError("protocol.motion_trials must be 'best' or 'all'")
        if self.loops_per_segment < 1 or self.trials_per_test < 1:
            raise ConfigError("protocol loop and trial counts must be >= 1")
        for row in self.latin_rows:
            first, _, second = row.partition("/")
            if len(first) != 2 or len(second) != 2 or {first[0], second[0]} != {"S", "D"}:
                raise ConfigError(f"bad latin row {row!r}; expected e.g. 'SA/DB'")
            for code in (first[1], second[1]):
                if code not in self.melodies:
                    raise ConfigError(f"latin row {row!r} names melody {code!r} not in protocol.melodies")


@dataclass(frozen=True)
class AnalysisConfig:
    joint_mask: tuple | None = None  # None -> every non-wrist joint
    orientation_normalize: bool = False
    criterion: float = 0.60
    slope_segment: str = "Full"

    def __post_init__(self):
        if self.joint_mask is not None:
            object.__setattr__(self, "joint_mask", tuple(int(j) for j in self.joint_mask))


@dataclass(frozen=True)
class AppConfig:
    controller: ControllerConfig = ControllerConfig()
    learner: LearnerParams = LearnerParams()
    protocol: ProtocolConfig = ProtocolConfig()
    match: MatchConfig = MatchConfig()
    weights: ScoreWeights = ScoreWeights()
    analysis: AnalysisConfig = AnalysisConfig()

    def with_overrides(self, **sections) -> "AppConfig":
        """``cfg.with_overrides(protocol={"participants": 4})`` returns an updated copy."""
        data = config_to_dict(self)
        for name, values in sections.items():
            if name not in data:
                raise ConfigError(f"unknown config section {name!r}")
            data[name].update(values)
        return config_from_dict(data)


_SECTION_CLASSES = {"controller": ControllerConfig, "learner": LearnerParams, "protocol": ProtocolConfig,
                    "match": MatchConfig, "weights": ScoreWeights, "analysis": AnalysisConfig}


def _plain(v: Any) -> Any:
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


def config_to_dict(cfg: AppConfig) -> dict:
    return {name: {f.name: _plain(getattr(getattr(cfg, name), f.name))
                   for f in dataclasses.fields(cls)}
            for name, cls in _SECTION_CLASSES.items()}


def config_from_dict(data: dict) -> AppConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be an object")
    unknown = sorted(set(data) - set(_SECTION_CLASSES))
    if unknown:
        raise ConfigError(f"unknown config section {unknown[0]!r}")
    sections = {}
    for name, cls in _SECTION_CLASSES.items():
        values = data.get(name, {})
        if not isinstance(values, dict):
            raise ConfigError(f"section {name!r} must be an object")
        known = {f.name for f in dataclasses.fields(cls)}
        bad = sorted(set(values) - known)
        if bad:
            raise ConfigError(f"unknown key {name}.{bad[0]}")
        try:
            sections[name] = cls(**values)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: {exc}") from None
    return AppConfig(**sections)


def load_config(path) -> AppConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return config_from_dict(data)


def dump_config(cfg: AppConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"


__all__ = ["AnalysisConfig", "AppConfig", "ConfigError", "ControllerConfig", "LATIN_ROWS", "LearnerParams",
           "MatchConfig", "Mode", "ProtocolConfig", "ScoreWeights", "config_from_dict", "config_to_dict",
           "dump_config", "load_config"]

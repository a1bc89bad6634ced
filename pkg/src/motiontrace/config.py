"""Toolkit-wide configuration: defaults, YAML file loading, stable digest.

Precedence: built-in defaults < config file < explicit overrides (CLI flags
or per-request overrides). The config file path may also come from the
MOTIONTRACE_CONFIG environment variable.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields

import yaml

from .augment import DensifyConfig
from .motion import MotionConfig
from .rewards import RewardConfig

CONFIG_ENV_VAR = "MOTIONTRACE_CONFIG"


@dataclass(frozen=True)
class ToolkitConfig:
    reward: RewardConfig = field(default_factory=RewardConfig)
    densify: DensifyConfig = field(default_factory=DensifyConfig)
    port: int = 8731
    batch_cap: int = 256

    def __post_init__(self):
        if self.batch_cap < 1:
            raise ValueError("batch_cap must be >= 1")
        if not (0 < self.port < 65536):
            raise ValueError(f"port out of range: {self.port}")


def _build(cls, raw: dict, where: str):
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown {where} keys: {sorted(unknown)} (known: {sorted(known)})")
    return cls(**raw)


def build_motion_config(raw: dict | None, base: MotionConfig = MotionConfig()) -> MotionConfig:
    merged = {**asdict(base), **(raw or {})}
    return _build(MotionConfig, merged, "motion config")


def build_reward_config(raw: dict | None, base: RewardConfig = RewardConfig()) -> RewardConfig:
    raw = dict(raw or {})
    motion_raw = raw.pop("motion", None)
    merged = {f.name: getattr(base, f.name) for f in fields(RewardConfig)}
    merged.update(raw)
    merged["motion"] = build_motion_config(motion_raw, base.motion)
    return _build(RewardConfig, merged, "reward config")


def load_toolkit_config(path: str | None = None) -> ToolkitConfig:
    """Load config from an explicit path, $MOTIONTRACE_CONFIG, or defaults."""
    path = path or os.environ.get(CONFIG_ENV_VAR)
    if path is None:
        return ToolkitConfig()
    with open(path, "r", encoding="utf-8") as handle:
        raw = yaml.safe_load(handle) or {}
    if not isinstance(raw, dict):
        raise ValueError(f"config file must hold a mapping, got {type(raw).__name__}")
    known_sections = {"reward", "motion", "densify", "service"}
    unknown = set(raw) - known_sections
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")

    reward_raw = dict(raw.get("reward") or {})
    if "motion" in raw:
        reward_raw["motion"] = raw["motion"]
    reward = build_reward_config(reward_raw)
    densify = _build(DensifyConfig, dict(raw.get("densify") or {}), "densify config")
    service_raw = dict(raw.get("service") or {})
    extra = set(service_raw) - {"port", "batch_cap"}
    if extra:
        raise ValueError(f"unknown service keys: {sorted(extra)}")
    return ToolkitConfig(
        reward=reward,
        densify=densify,
        port=int(service_raw.get("port", 8731)),
        batch_cap=int(service_raw.get("batch_cap", 256)),
    )


def config_digest(cfg: ToolkitConfig) -> str:
    """Stable hash of the effective configuration."""
    payload = json.dumps(asdict(cfg), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

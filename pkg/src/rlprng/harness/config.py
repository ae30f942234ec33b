"""Experiment configuration files.

A config is a TOML file with four tables::

    [environment]   # EnvConfig fields except ``battery``
    [agent]         # AgentConfig fields
    [training]      # TrainingConfig fields
    [battery]       # optional ``preset`` ("calibrated" or "default") plus
                    # BatteryConfig overrides

Unknown tables or keys raise :class:`ConfigError`.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..agents import AgentConfig
from ..mdp import EnvConfig
from ..nist import CALIBRATED_CONFIG, DEFAULT_CONFIG, BatteryConfig

BATTERY_PRESETS = {"calibrated": CALIBRATED_CONFIG, "default": DEFAULT_CONFIG}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainingConfig:
    volleys: int = 10
    episodes_per_volley: int = 200
    evaluation_episodes: int = 100
    env_seed: int = 0
    agent_seed: int = 1
    baseline_seed: int = 2
    baseline_count: int = 1000
    checkpoint_every: int = 1
    workers: int = 1
    metric_window: int = 20
    metric_window_mode: str = "episode"
    sampling_mode: str = "explore"

    def __post_init__(self):
        for name in ("volleys", "episodes_per_volley", "checkpoint_every",
                     "workers", "metric_window"):
            if getattr(self, name) < 1:
                raise ConfigError(f"training.{name} must be >= 1")
        if self.evaluation_episodes < 0 or self.baseline_count < 0:
            raise ConfigError("evaluation_episodes and baseline_count must be >= 0")
        if self.metric_window_mode not in ("episode", "stream"):
            raise ConfigError("metric_window_mode must be 'episode' or 'stream'")
        if self.sampling_mode not in ("explore", "exploit"):
            raise ConfigError("sampling_mode must be 'explore' or 'exploit'")

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class TrainConfig:
    environment: EnvConfig = field(default_factory=EnvConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)

    def to_dict(self):
        return {"environment": self.environment.to_dict(),
                "agent": self.agent.to_dict(),
                "training": self.training.to_dict()}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def digest(self):
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True)
                              .encode()).hexdigest()[:16]


def _battery_from(table):
    table = dict(table)
    preset = table.pop("preset", "calibrated")
    if preset not in BATTERY_PRESETS:
        raise ConfigError(f"unknown battery preset {preset!r}")
    base = BATTERY_PRESETS[preset].to_dict()
    unknown = set(table) - set(base)
    if unknown:
        raise ConfigError(f"unknown battery keys: {sorted(unknown)}")
    base.update(table)
    return BatteryConfig.from_dict(base)


def config_from_dict(data):
    """Build a :class:`TrainConfig` from parsed nested tables."""
    allowed = {"environment", "agent", "training", "battery"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    try:
        battery = _battery_from(data.get("battery", {}))
        env_table = dict(data.get("environment", {}))
        if "battery" in env_table:
            raise ConfigError("put battery settings in the [battery] section")
        env_known = {f.name for f in fields(EnvConfig)} - {"battery"}
        bad = set(env_table) - env_known
        if bad:
            raise ConfigError(f"unknown environment keys: {sorted(bad)}")
        env = EnvConfig(**env_table, battery=battery)
        agent = AgentConfig.from_dict(data.get("agent", {}))
        tr_table = dict(data.get("training", {}))
        bad = set(tr_table) - {f.name for f in fields(TrainingConfig)}
        if bad:
            raise ConfigError(f"unknown training keys: {sorted(bad)}")
        training = TrainingConfig(**tr_table)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return TrainConfig(env, agent, training)


def load_config(path):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data)


def resolved_from_dict(d):
    """Rebuild a config from :meth:`TrainConfig.to_dict` output."""
    return TrainConfig(EnvConfig.from_dict(d["environment"]),
                       AgentConfig.from_dict(d["agent"]),
                       TrainingConfig(**d["training"]))


def with_training(config, **changes):
    return replace(config, training=replace(config.training, **changes))

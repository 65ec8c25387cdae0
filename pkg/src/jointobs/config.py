"""Engine configuration: defaults from packaged data, strict override merging."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Union

from .aog import Graph, build_default_aog
from .decision import (
    AssistBundles,
    Disruption,
    bundles_from_dict,
    bundles_to_dict,
    disruptions_from_dict,
    disruptions_to_dict,
)
from .observation import ActivityMap, ConfigError, PhysioThresholds, Registry

_TOP_LEVEL_KEYS = {
    "_comment",
    "period_ms",
    "vote_weight",
    "occupation_threshold",
    "action_threshold",
    "preference",
    "physio_minutes",
    "episode",
    "fact_registry",
    "activity_map",
    "disruptions",
    "assists",
    "aog",
}
_PREFERENCE_KEYS = {"step", "initial_logit", "bounds"}
_PHYSIO_KEYS = {"thirst", "hunger", "fatigue_work", "fatigue_vr"}
_EPISODE_KEYS = {"ticks", "event_tick", "trials", "dropout"}


@dataclass(frozen=True)
class PreferenceDefaults:
    step: float = 1.0
    initial_logit: float = 1.0
    z_min: float = -6.0
    z_max: float = 6.0


@dataclass(frozen=True)
class EpisodeDefaults:
    ticks: int = 12
    event_tick: int = 8
    trials: int = 1
    dropout: float = 0.0

    def __post_init__(self) -> None:
        if self.ticks < 1:
            raise ConfigError("episode ticks must be at least 1")
        if not 0 <= self.event_tick < self.ticks:
            raise ConfigError("event tick must fall inside the episode")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")


@dataclass(frozen=True)
class EngineConfig:
    """Complete, validated runtime configuration."""

    period_ms: int = 20
    vote_weight: float = 1.0
    occupation_threshold: float = 0.5
    action_threshold: float = 0.5
    preference: PreferenceDefaults = field(default_factory=PreferenceDefaults)
    physio: PhysioThresholds = field(default_factory=PhysioThresholds)
    episode: EpisodeDefaults = field(default_factory=EpisodeDefaults)
    registry: Registry = None  # type: ignore[assignment]
    activity_map: ActivityMap = field(default_factory=ActivityMap)
    graph: Graph = None  # type: ignore[assignment]
    disruptions: Mapping[str, Disruption] = field(default_factory=dict)
    assists: AssistBundles = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.period_ms <= 0:
            raise ConfigError("clock period must be positive")
        if self.vote_weight <= 0:
            raise ConfigError("vote weight must be positive")
        if not 0.0 < self.occupation_threshold < 1.0:
            raise ConfigError("occupation threshold must lie in (0, 1)")
        if not 0.0 <= self.action_threshold < 1.0:
            raise ConfigError("action threshold must lie in [0, 1)")
        if self.registry is not None and self.graph is not None:
            self.graph.validate_against(self.registry)
        for disruption in self.disruptions.values():
            if disruption.assist is not None and disruption.assist not in self.assists:
                raise ConfigError(
                    f"disruption {disruption.disruption_id!r} names assist "
                    f"{disruption.assist!r} with no command bundle"
                )

    def to_echo_dict(self) -> dict:
        """Full effective configuration, for the run log."""
        return {
            "period_ms": self.period_ms,
            "vote_weight": self.vote_weight,
            "occupation_threshold": self.occupation_threshold,
            "action_threshold": self.action_threshold,
            "preference": {
                "step": self.preference.step,
                "initial_logit": self.preference.initial_logit,
                "bounds": [self.preference.z_min, self.preference.z_max],
            },
            "physio_minutes": {
                "thirst": self.physio.thirst_min,
                "hunger": self.physio.hunger_min,
                "fatigue_work": self.physio.fatigue_work_min,
                "fatigue_vr": self.physio.fatigue_vr_min,
            },
            "episode": {
                "ticks": self.episode.ticks,
                "event_tick": self.episode.event_tick,
                "trials": self.episode.trials,
                "dropout": self.episode.dropout,
            },
            "fact_registry": self.registry.to_dict(),
            "activity_map": self.activity_map.to_dict(),
            "disruptions": disruptions_to_dict(self.disruptions),
            "assists": bundles_to_dict(self.assists),
            "aog": self.graph.to_dict(),
        }


def _check_keys(section: str, data: Mapping, allowed: set[str]) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown {section} key(s): {', '.join(sorted(unknown))}")


def _default_raw() -> dict:
    text = resources.files("jointobs.data").joinpath("config.json").read_text(encoding="utf-8")
    return json.loads(text)


def _merge(base: dict, override: Mapping) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def config_from_dict(raw: Mapping) -> EngineConfig:
    _check_keys("config", raw, _TOP_LEVEL_KEYS)
    pref_raw = raw.get("preference", {})
    _check_keys("preference", pref_raw, _PREFERENCE_KEYS)
    physio_raw = raw.get("physio_minutes", {})
    _check_keys("physio_minutes", physio_raw, _PHYSIO_KEYS)
    episode_raw = raw.get("episode", {})
    _check_keys("episode", episode_raw, _EPISODE_KEYS)

    bounds = pref_raw.get("bounds", [-6.0, 6.0])
    if len(bounds) != 2 or bounds[0] >= bounds[1]:
        raise ConfigError("preference bounds must be [lower, upper] with lower < upper")
    preference = PreferenceDefaults(
        step=float(pref_raw.get("step", 1.0)),
        initial_logit=float(pref_raw.get("initial_logit", 1.0)),
        z_min=float(bounds[0]),
        z_max=float(bounds[1]),
    )
    if preference.step <= 0:
        raise ConfigError("preference step must be positive")
    physio = PhysioThresholds(
        thirst_min=float(physio_raw.get("thirst", 30.0)),
        hunger_min=float(physio_raw.get("hunger", 180.0)),
        fatigue_work_min=float(physio_raw.get("fatigue_work", 120.0)),
        fatigue_vr_min=float(physio_raw.get("fatigue_vr", 20.0)),
    )
    episode = EpisodeDefaults(
        ticks=int(episode_raw.get("ticks", 12)),
        event_tick=int(episode_raw.get("event_tick", 8)),
        trials=int(episode_raw.get("trials", 1)),
        dropout=float(episode_raw.get("dropout", 0.0)),
    )
    registry = Registry.from_dict(raw["fact_registry"])
    graph = Graph.from_dict(raw["aog"]) if "aog" in raw else build_default_aog()
    return EngineConfig(
        period_ms=int(raw.get("period_ms", 20)),
        vote_weight=float(raw.get("vote_weight", 1.0)),
        occupation_threshold=float(raw.get("occupation_threshold", 0.5)),
        action_threshold=float(raw.get("action_threshold", 0.5)),
        preference=preference,
        physio=physio,
        episode=episode,
        registry=registry,
        activity_map=ActivityMap.from_dict(raw.get("activity_map", {})),
        graph=graph,
        disruptions=disruptions_from_dict(raw.get("disruptions", {})),
        assists=bundles_from_dict(raw.get("assists", {})),
    )


def default_config() -> EngineConfig:
    return config_from_dict(_default_raw())


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping] = None,
) -> EngineConfig:
    """Defaults, overlaid by an optional config file, overlaid by explicit overrides.

    Unknown keys anywhere are a :class:`ConfigError`; flag-style overrides win
    over file values.
    """
    raw = _default_raw()
    if path is not None:
        file_path = Path(path)
        if not file_path.exists():
            raise FileNotFoundError(f"config file {file_path} does not exist")
        try:
            user_raw = json.loads(file_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {file_path} is not valid JSON: {exc}") from exc
        if not isinstance(user_raw, dict):
            raise ConfigError(f"config file {file_path} must hold a JSON object")
        raw = _merge(raw, user_raw)
    if overrides:
        raw = _merge(raw, overrides)
    return config_from_dict(raw)

"""Scripted occupation/disruption scenarios and the 13 x 6 x 10 test set.

A scenario is a steady per-tick fact stream (the occupation) plus a disruption
script: values that change at the event tick, and optionally backdated anchor
readings that seed the physiological timers so a need activates exactly at the
event. All facts are validated against the registry when the reading rows are
built, never at emission time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .config import EngineConfig
from .observation import (
    MS_PER_MINUTE,
    ConfigError,
    Payload,
    Registry,
    SensorGroup,
    SensorReading,
    SensorSimulator,
    SENSOR_GROUPS,
)

NO_ACTION = "no-action"
#: Ground-truth response to a spilled glass; deliberately absent from the
#: decision registry, so the engine can never produce it.
CLEANUP_ACTION = "cleanup"

#: Values every sensor reports when nothing notable is happening.
BASELINE_STREAMS: dict[str, Payload] = {
    "visitor-at-door": False,
    "desk-event": "none",
    "pose": "resting",
    "speaking": False,
    "active-window": "idle-desktop",
    "active-scene": "none",
    "battery-level": 80,
    "mouse-active": False,
    "keyboard-active": False,
    "hmd-active": False,
    "controller-active": False,
    "device-usage": 0,
}

#: Occupation scripts: what the sensors steadily report for each case.
OCCUPATIONS: dict[str, dict] = {
    "O1": {
        "description": "one-on-one discussion in VR",
        "facts": {"pose": "using-device", "speaking": True, "active-scene": "vr-meeting-room",
                   "hmd-active": True, "controller-active": True},
    },
    "O2": {
        "description": "playing a game in VR",
        "facts": {"pose": "using-device", "active-scene": "vr-game",
                   "hmd-active": True, "controller-active": True},
    },
    "O3": {
        "description": "painting in VR with controllers",
        "facts": {"pose": "using-device", "active-scene": "vr-paint-studio",
                   "hmd-active": True, "controller-active": True},
    },
    "O4": {
        "description": "multi-person meeting in VR",
        "facts": {"pose": "using-device", "speaking": True, "active-scene": "vr-conference",
                   "hmd-active": True, "controller-active": True},
    },
    "O5": {
        "description": "watching a movie in VR",
        "facts": {"pose": "using-device", "active-scene": "vr-cinema", "hmd-active": True},
    },
    "O6": {
        "description": "online interview on the PC",
        "facts": {"pose": "using-device", "speaking": True, "active-window": "video-call"},
    },
    "O7": {
        "description": "playing a game on the PC",
        "facts": {"pose": "using-keyboard", "active-window": "pc-game",
                   "mouse-active": True, "keyboard-active": True},
    },
    "O8": {
        "description": "writing an article on the PC",
        "facts": {"pose": "using-keyboard", "active-window": "word-processor",
                   "mouse-active": True, "keyboard-active": True},
    },
    "O9": {
        "description": "attending an online lesson on the PC",
        "facts": {"pose": "using-device", "active-window": "lesson-portal"},
    },
    "O10": {
        "description": "watching a movie on the PC",
        "facts": {"pose": "resting", "active-window": "media-player"},
    },
    "O11": {
        "description": "using a mobile device",
        "facts": {"pose": "using-mobile-device"},
    },
    "O12": {
        "description": "reading a book",
        "facts": {"pose": "reading"},
    },
    "O13": {
        "description": "having a rest",
        "facts": {"pose": "resting"},
    },
}

OCCUPATION_IDS = tuple(OCCUPATIONS)
DISRUPTION_IDS = ("D1", "D2", "D3", "D4", "D5", "D6")
GROUP_IDS = tuple(SENSOR_GROUPS)


@dataclass(frozen=True)
class Anchor:
    """A backdated reading injected at tick zero, e.g. the last observed drink."""

    fact_id: str
    payload: Payload
    timestamp: int


@dataclass(frozen=True)
class Scenario:
    """One fully scripted episode with its ground-truth decision."""

    occupation_id: str
    disruption_id: str
    ground_truth: str
    duration: int
    event_tick: int
    period: int
    streams: Mapping[str, Payload]
    pre_event: Mapping[str, Payload] = field(default_factory=dict)
    event: Mapping[str, Payload] = field(default_factory=dict)
    anchors: tuple[Anchor, ...] = ()

    @property
    def key(self) -> str:
        return f"{self.occupation_id}|{self.disruption_id}"

    def values_at(self, tick: int) -> dict[str, Payload]:
        values = dict(self.streams)
        overlay = self.event if tick >= self.event_tick else self.pre_event
        values.update(overlay)
        return values

    def build_rows(self, registry: Registry) -> list[list[SensorReading]]:
        """Expand the script into per-tick readings; validates every fact."""
        sequences: dict[str, int] = {}
        rows: list[list[SensorReading]] = []
        for tick in range(self.duration):
            readings: list[SensorReading] = []
            if tick == 0:
                for anchor in self.anchors:
                    readings.append(self._reading(registry, sequences, anchor.fact_id,
                                                  anchor.payload, anchor.timestamp))
            for fact_id in sorted(self.values_at(tick)):
                payload = self.values_at(tick)[fact_id]
                readings.append(self._reading(registry, sequences, fact_id,
                                              payload, tick * self.period))
            rows.append(readings)
        return rows

    def _reading(
        self,
        registry: Registry,
        sequences: dict[str, int],
        fact_id: str,
        payload: Payload,
        timestamp: int,
    ) -> SensorReading:
        fact = registry.make_fact(fact_id, payload)  # raises ConfigError for unknown ids
        spec = registry.spec_for_fact(fact_id)
        seq = sequences.get(spec.sensor_id, -1) + 1
        sequences[spec.sensor_id] = seq
        return SensorReading(
            sensor_id=spec.sensor_id,
            category=spec.category,
            timestamp=timestamp,
            sequence=seq,
            fact=fact,
        )

    def simulator(self, registry: Registry) -> SensorSimulator:
        return SensorSimulator(self.build_rows(registry))

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "occupation": self.occupation_id,
            "disruption": self.disruption_id,
            "ground_truth": self.ground_truth,
            "duration": self.duration,
            "event_tick": self.event_tick,
            "period": self.period,
            "streams": dict(sorted(self.streams.items())),
            "pre_event": dict(sorted(self.pre_event.items())),
            "event": dict(sorted(self.event.items())),
            "anchors": [[a.fact_id, a.payload, a.timestamp] for a in self.anchors],
        }


def _physio_anchor_ts(event_tick: int, period: int, minutes: float) -> int:
    # The flag activates at the first clock edge after the event tick's readings.
    return event_tick * period - int(minutes * MS_PER_MINUTE)


def _disruption_script(
    disruption_id: str, occupation_id: str, config: EngineConfig
) -> tuple[dict[str, Payload], dict[str, Payload], tuple[Anchor, ...]]:
    """(pre-event overlay, event overlay, anchors) for a disruption script."""
    event_tick = config.episode.event_tick
    period = config.period_ms
    if disruption_id == "D1":
        return {}, {"visitor-at-door": True}, ()
    if disruption_id == "D2":
        ts = _physio_anchor_ts(event_tick, period, config.physio.thirst_min)
        return {}, {}, (Anchor("pose", "drinking", ts),)
    if disruption_id == "D3":
        # An overuse signal cannot coexist with rest: the resting case simply
        # never produces one, and the correct response is to stay quiet.
        if occupation_id == "O13":
            return {}, {}, ()
        limit = 20
        return {"device-usage": limit - 1}, {"device-usage": limit + 1}, ()
    if disruption_id == "D4":
        return {}, {"desk-event": "phone-ringing"}, ()
    if disruption_id == "D5":
        return {}, {"battery-level": 15}, ()
    if disruption_id == "D6":
        return {}, {"desk-event": "water-spilled"}, ()
    raise ConfigError(f"unknown disruption id {disruption_id!r}")


def ground_truth_for(occupation_id: str, disruption_id: str, config: EngineConfig) -> str:
    """The correct response: stay quiet while resting, else the canonical assist."""
    if occupation_id == "O13":
        return NO_ACTION
    if disruption_id == "D6":
        return CLEANUP_ACTION
    disruption = config.disruptions[disruption_id]
    assert disruption.assist is not None
    return disruption.assist


def build_cell_scenario(
    occupation_id: str, disruption_id: str, config: EngineConfig
) -> Scenario:
    if occupation_id not in OCCUPATIONS:
        raise ConfigError(f"unknown occupation id {occupation_id!r}")
    streams = dict(BASELINE_STREAMS)
    streams.update(OCCUPATIONS[occupation_id]["facts"])
    pre_event, event, anchors = _disruption_script(disruption_id, occupation_id, config)
    return Scenario(
        occupation_id=occupation_id,
        disruption_id=disruption_id,
        ground_truth=ground_truth_for(occupation_id, disruption_id, config),
        duration=config.episode.ticks,
        event_tick=config.episode.event_tick,
        period=config.period_ms,
        streams=streams,
        pre_event=pre_event,
        event=event,
        anchors=anchors,
    )


@dataclass(frozen=True)
class TestCell:
    occupation_id: str
    disruption_id: str
    group: SensorGroup
    scenario: Scenario
    ground_truth: str


def build_test_set(
    config: EngineConfig, group_ids: Sequence[str] = GROUP_IDS
) -> list[TestCell]:
    """All (disruption x occupation x group) cell descriptors, 780 by default."""
    cells: list[TestCell] = []
    for disruption_id in DISRUPTION_IDS:
        for occupation_id in OCCUPATION_IDS:
            scenario = build_cell_scenario(occupation_id, disruption_id, config)
            for gid in group_ids:
                if gid not in SENSOR_GROUPS:
                    raise ConfigError(f"unknown sensor group {gid!r}")
                cells.append(
                    TestCell(
                        occupation_id=occupation_id,
                        disruption_id=disruption_id,
                        group=SENSOR_GROUPS[gid],
                        scenario=scenario,
                        ground_truth=scenario.ground_truth,
                    )
                )
    return cells


def scenario_from_dict(data: Mapping, config: EngineConfig) -> Scenario:
    """Rebuild a scenario from JSON.

    A short form ``{"occupation": "O1", "disruption": "D1"}`` references the
    bundled scripts; the long form spells out streams and overlays explicitly.
    """
    known = {"occupation", "disruption", "group", "ground_truth", "duration",
             "event_tick", "period", "streams", "pre_event", "event", "anchors", "_comment"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown scenario key(s): {', '.join(sorted(unknown))}")
    occupation = data.get("occupation")
    disruption = data.get("disruption")
    if "streams" not in data:
        if occupation is None or disruption is None:
            raise ConfigError("scenario needs either explicit streams or occupation+disruption ids")
        base = build_cell_scenario(occupation, disruption, config)
        return Scenario(
            occupation_id=occupation,
            disruption_id=disruption,
            ground_truth=data.get("ground_truth", base.ground_truth),
            duration=int(data.get("duration", base.duration)),
            event_tick=int(data.get("event_tick", base.event_tick)),
            period=int(data.get("period", base.period)),
            streams=base.streams,
            pre_event=base.pre_event,
            event=base.event,
            anchors=base.anchors,
        )
    return Scenario(
        occupation_id=occupation or "custom",
        disruption_id=disruption or "custom",
        ground_truth=data.get("ground_truth", NO_ACTION),
        duration=int(data.get("duration", config.episode.ticks)),
        event_tick=int(data.get("event_tick", config.episode.event_tick)),
        period=int(data.get("period", config.period_ms)),
        streams=dict(data["streams"]),
        pre_event=dict(data.get("pre_event", {})),
        event=dict(data.get("event", {})),
        anchors=tuple(Anchor(f, p, int(t)) for f, p, t in data.get("anchors", ())),
    )


def load_scenario(path: Union[str, Path], config: EngineConfig) -> tuple[Scenario, Optional[str]]:
    """Read a scenario file; returns (scenario, optional group id named in the file)."""
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"scenario file {file_path} does not exist")
    try:
        data = json.loads(file_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario file {file_path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(data, config), data.get("group")

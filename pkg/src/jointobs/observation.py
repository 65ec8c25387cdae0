"""Observation vocabulary: categories, facts, poses, physiological timers, simulated sensors.

Everything the engine can observe is a symbolic ``Fact`` emitted by a named
sensor. Each sensor belongs to exactly one of the four observation categories,
so disabling a category (sensor ablation) silences a well-defined subset of
the fact stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence, Union

Payload = Union[str, int, bool, None]

MS_PER_MINUTE = 60_000


class ConfigError(ValueError):
    """Raised for invalid configuration: unknown keys, bad values, broken references."""


class ObservationCategory(str, Enum):
    """The four information-source classes of joint observation."""

    PE = "PE"  # physical environment
    PU = "PU"  # physical user
    VE = "VE"  # virtual environment
    VU = "VU"  # virtual user


class PoseLabel(str, Enum):
    """The nine user pose classes reported by the pose sensor."""

    USING_DEVICE = "using-device"
    USING_KEYBOARD = "using-keyboard"
    USING_MOUSE = "using-mouse"
    WRITING = "writing"
    READING = "reading"
    USING_MOBILE_DEVICE = "using-mobile-device"
    RESTING = "resting"
    DRINKING = "drinking"
    EATING = "eating"


class ActivityClass(str, Enum):
    """Coarse engagement class of a PC window or a VR scene."""

    WORK = "work"
    ENTERTAINMENT = "entertainment"
    OTHERS = "others"


class DeviceEnvironment(str, Enum):
    """Which screen the activity mapping applies to."""

    PC = "pc"
    VR = "vr"


class PhysioNeed(str, Enum):
    THIRST = "thirst"
    HUNGER = "hunger"
    FATIGUE = "fatigue"


@dataclass(frozen=True)
class Fact:
    """One symbolic observation value, e.g. ``pose = using-keyboard``."""

    fact_id: str
    category: ObservationCategory
    payload: Payload = None


@dataclass(frozen=True)
class SensorReading:
    """A timestamped fact emitted by one sensor.

    Timestamps are virtual-time milliseconds and are nondecreasing per sensor;
    sequence numbers are strictly increasing per sensor.
    """

    sensor_id: str
    category: ObservationCategory
    timestamp: int
    sequence: int
    fact: Fact


@dataclass(frozen=True)
class FactSpec:
    """Registry entry fixing a fact's category, emitting sensor and payload domain."""

    fact_id: str
    category: ObservationCategory
    sensor_id: str
    kind: str  # "bool" | "int" | "enum" | "str"
    values: tuple[str, ...] = ()

    def validate_payload(self, payload: Payload) -> None:
        if self.kind == "bool" and not isinstance(payload, bool):
            raise ConfigError(f"fact {self.fact_id!r} expects a bool payload, got {payload!r}")
        if self.kind == "int" and (isinstance(payload, bool) or not isinstance(payload, int)):
            raise ConfigError(f"fact {self.fact_id!r} expects an int payload, got {payload!r}")
        if self.kind == "enum" and payload not in self.values:
            raise ConfigError(
                f"fact {self.fact_id!r} expects one of {sorted(self.values)}, got {payload!r}"
            )
        if self.kind == "str" and not isinstance(payload, str):
            raise ConfigError(f"fact {self.fact_id!r} expects a str payload, got {payload!r}")


class Registry:
    """Closed registry of known facts and the sensors that emit them."""

    def __init__(self, specs: Iterable[FactSpec]):
        self.facts: dict[str, FactSpec] = {}
        self.sensors: dict[str, FactSpec] = {}
        for spec in specs:
            if spec.fact_id in self.facts:
                raise ConfigError(f"duplicate fact id {spec.fact_id!r}")
            if spec.sensor_id in self.sensors:
                raise ConfigError(f"duplicate sensor id {spec.sensor_id!r}")
            self.facts[spec.fact_id] = spec
            self.sensors[spec.sensor_id] = spec

    def sensor_ids(self) -> list[str]:
        return list(self.sensors)

    def spec_for_fact(self, fact_id: str) -> FactSpec:
        try:
            return self.facts[fact_id]
        except KeyError:
            raise ConfigError(f"unknown fact id {fact_id!r}") from None

    def make_fact(self, fact_id: str, payload: Payload) -> Fact:
        spec = self.spec_for_fact(fact_id)
        spec.validate_payload(payload)
        return Fact(fact_id=fact_id, category=spec.category, payload=payload)

    @classmethod
    def from_dict(cls, data: Mapping[str, Mapping]) -> "Registry":
        specs = []
        for fact_id, entry in data.items():
            specs.append(
                FactSpec(
                    fact_id=fact_id,
                    category=ObservationCategory(entry["category"]),
                    sensor_id=entry["sensor"],
                    kind=entry["kind"],
                    values=tuple(entry.get("values", ())),
                )
            )
        return cls(specs)

    def to_dict(self) -> dict:
        out: dict[str, dict] = {}
        for fact_id, spec in self.facts.items():
            entry: dict = {"category": spec.category.value, "sensor": spec.sensor_id, "kind": spec.kind}
            if spec.values:
                entry["values"] = list(spec.values)
            out[fact_id] = entry
        return out


@dataclass(frozen=True)
class ActivityMap:
    """Window-id and scene-id to activity-class mapping; unknown ids fall back to OTHERS."""

    pc: Mapping[str, ActivityClass] = field(default_factory=dict)
    vr: Mapping[str, ActivityClass] = field(default_factory=dict)

    def classify(self, environment: DeviceEnvironment, identifier: Payload) -> ActivityClass:
        table = self.pc if environment is DeviceEnvironment.PC else self.vr
        if isinstance(identifier, str):
            return table.get(identifier, ActivityClass.OTHERS)
        return ActivityClass.OTHERS

    @classmethod
    def from_dict(cls, data: Mapping[str, Mapping[str, str]]) -> "ActivityMap":
        return cls(
            pc={k: ActivityClass(v) for k, v in data.get("pc", {}).items()},
            vr={k: ActivityClass(v) for k, v in data.get("vr", {}).items()},
        )

    def to_dict(self) -> dict:
        return {
            "pc": {k: v.value for k, v in self.pc.items()},
            "vr": {k: v.value for k, v in self.vr.items()},
        }


def map_activity(
    environment: DeviceEnvironment, identifier: Payload, mapping: ActivityMap
) -> ActivityClass:
    """Classify a window or scene identifier; unregistered identifiers are OTHERS."""
    return mapping.classify(environment, identifier)


# ---------------------------------------------------------------------------
# Physiological-need timers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhysioThresholds:
    """Activation thresholds in minutes; all strictly positive, user-adjustable."""

    thirst_min: float = 30.0
    hunger_min: float = 180.0
    fatigue_work_min: float = 120.0
    fatigue_vr_min: float = 20.0

    def __post_init__(self) -> None:
        for name in ("thirst_min", "hunger_min", "fatigue_work_min", "fatigue_vr_min"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"physio threshold {name} must be strictly positive")


@dataclass(frozen=True)
class PhysioState:
    """Timer anchors for the physiological needs.

    ``None`` means the corresponding behaviour has never been observed, so the
    need has no basis and its flag stays off. Flags are derived on demand by
    :func:`physio_flags`, never stored.
    """

    thresholds: PhysioThresholds = field(default_factory=PhysioThresholds)
    last_drink: Optional[int] = None
    last_eat: Optional[int] = None
    work_start: Optional[int] = None
    vr_session_start: Optional[int] = None
    last_update: Optional[int] = None


_WORK_POSES = frozenset(
    {
        PoseLabel.USING_DEVICE,
        PoseLabel.USING_KEYBOARD,
        PoseLabel.USING_MOUSE,
        PoseLabel.WRITING,
        PoseLabel.READING,
        PoseLabel.USING_MOBILE_DEVICE,
    }
)


def update_physio(state: PhysioState, fact: Fact, now: int) -> PhysioState:
    """Fold one observed fact into the physiological timers.

    Only pose and HMD-activity facts move the timers. Raises ``ValueError``
    when ``now`` precedes an already-recorded observation (clock regression).
    """
    if state.last_update is not None and now < state.last_update:
        raise ValueError(
            f"clock regression: reading at {now} ms precedes last update {state.last_update} ms"
        )
    updates: dict[str, Optional[int]] = {"last_update": now}
    if fact.fact_id == "pose":
        pose = PoseLabel(fact.payload)
        if pose is PoseLabel.DRINKING:
            updates["last_drink"] = now
        elif pose is PoseLabel.EATING:
            updates["last_eat"] = now
        if pose is PoseLabel.RESTING:
            updates["work_start"] = None
        elif pose in _WORK_POSES and state.work_start is None:
            updates["work_start"] = now
    elif fact.fact_id == "hmd-active":
        if fact.payload is True:
            if state.vr_session_start is None:
                updates["vr_session_start"] = now
        else:
            updates["vr_session_start"] = None
    return replace(state, **updates)


def _exceeded(anchor: Optional[int], now: int, minutes: float) -> Optional[bool]:
    if anchor is None:
        return None
    return (now - anchor) > minutes * MS_PER_MINUTE


def physio_assessment(state: PhysioState, now: int) -> dict[PhysioNeed, Optional[bool]]:
    """Per-need verdict: True/False when a basis exists, None when untracked."""
    thr = state.thresholds
    thirst = _exceeded(state.last_drink, now, thr.thirst_min)
    hunger = _exceeded(state.last_eat, now, thr.hunger_min)
    work = _exceeded(state.work_start, now, thr.fatigue_work_min)
    vr = _exceeded(state.vr_session_start, now, thr.fatigue_vr_min)
    if work is None and vr is None:
        fatigue: Optional[bool] = None
    else:
        fatigue = bool(work) or bool(vr)
    return {PhysioNeed.THIRST: thirst, PhysioNeed.HUNGER: hunger, PhysioNeed.FATIGUE: fatigue}


def physio_flags(state: PhysioState, now: int) -> frozenset[PhysioNeed]:
    """Currently active needs. Pure function of (state, now)."""
    return frozenset(
        need for need, verdict in physio_assessment(state, now).items() if verdict is True
    )


# ---------------------------------------------------------------------------
# Sensor groups and simulated sensors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SensorGroup:
    """A subset of observation categories whose sensors are switched on."""

    group_id: str
    categories: frozenset[ObservationCategory]

    def __contains__(self, category: ObservationCategory) -> bool:
        return category in self.categories

    def is_subset_of(self, other: "SensorGroup") -> bool:
        return self.categories <= other.categories


def _group(gid: str, *cats: ObservationCategory) -> SensorGroup:
    return SensorGroup(group_id=gid, categories=frozenset(cats))


_PE, _PU, _VE, _VU = (
    ObservationCategory.PE,
    ObservationCategory.PU,
    ObservationCategory.VE,
    ObservationCategory.VU,
)

#: The ten standard ablation groups.
SENSOR_GROUPS: dict[str, SensorGroup] = {
    "S1": _group("S1", _PE),
    "S2": _group("S2", _VU),
    "S3": _group("S3", _PU),
    "S4": _group("S4", _VU, _VE),
    "S5": _group("S5", _PE, _VU),
    "S6": _group("S6", _PU, _PE),
    "S7": _group("S7", _PU, _VU, _VE),
    "S8": _group("S8", _PU, _PE, _VU),
    "S9": _group("S9", _PU, _PE, _VE),
    "S10": _group("S10", _PU, _PE, _VU, _VE),
}


def custom_group(categories: Iterable[ObservationCategory]) -> SensorGroup:
    cats = frozenset(categories)
    name = "+".join(sorted(c.value for c in cats)) or "none"
    return SensorGroup(group_id=name, categories=cats)


class SensorSimulator:
    """Replays a precomputed reading schedule, filtered by the active group.

    Readings outside the activated categories are silently dropped, which is
    exactly what a missing sensor looks like downstream. Reading identity
    (timestamps, sequence numbers) is fixed by the schedule, so the emissions
    under a group are always a sub-multiset of those under any supergroup.
    """

    def __init__(self, rows: Sequence[Sequence[SensorReading]]):
        self._rows = [tuple(r) for r in rows]

    @property
    def duration(self) -> int:
        return len(self._rows)

    def emit(self, tick: int, group: SensorGroup) -> list[SensorReading]:
        if not 0 <= tick < len(self._rows):
            raise ValueError(f"tick {tick} outside scenario duration {len(self._rows)}")
        return [r for r in self._rows[tick] if r.category in group.categories]


def step_sensors(
    simulator: SensorSimulator, tick: int, group: SensorGroup
) -> list[SensorReading]:
    """Emit the tick's scheduled readings whose category is activated."""
    return simulator.emit(tick, group)

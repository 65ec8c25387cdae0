"""Conflict detection, factorized action probability, and joint-action dispatch.

A disruption becomes a conflict only when it was actually observed, the engine
can parse it, the user is occupied, and the channels the disruption demands
overlap the occupied ones. The decision probability factorizes into parse
confidence x conflict indicator x learned action preference; the assist runs
when the product reaches the action threshold.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from .aog import OccupationChannel, OccupationProfile, ParseTree
from .datamanager import AlignedSnapshot
from .observation import ConfigError, ObservationCategory, PhysioNeed
from .personalization import PreferenceStore

NO_ACTION = "no-action"


class ActuatorChannel(str, Enum):
    """The four embodiment channels an action bundle can target."""

    GRAPHICAL = "graphical"
    VIRTUAL_EMBODIED = "virtual-embodied"
    PHYSICAL_EMBODIED = "physical-embodied"
    AUDITORY = "auditory"


class DispatchError(RuntimeError):
    """An action bundle needs an actuator channel the registry does not provide."""


@dataclass(frozen=True)
class Trigger:
    """Observable condition that marks a disruption as present.

    ``fact`` kinds read the snapshot slot for ``fact_id``; the ``physio`` kind
    reads the named need from the physiological flags.
    """

    kind: str  # "is_true" | "equals" | "above" | "at_most" | "physio"
    fact_id: Optional[str] = None
    value: object = None
    need: Optional[PhysioNeed] = None

    def fires(
        self, snapshot: Optional[AlignedSnapshot], flags: frozenset[PhysioNeed]
    ) -> bool:
        if self.kind == "physio":
            return self.need in flags
        if snapshot is None:
            return False
        slot = snapshot.slot_for_fact(self.fact_id)
        if slot is None or not slot.is_active or slot.fact is None:
            return False
        payload = slot.fact.payload
        if self.kind == "is_true":
            return payload is True
        if self.kind == "equals":
            return payload == self.value
        if self.kind == "above":
            return isinstance(payload, (int, float)) and payload > self.value
        if self.kind == "at_most":
            return isinstance(payload, (int, float)) and payload <= self.value
        raise ConfigError(f"unknown trigger kind {self.kind!r}")


@dataclass(frozen=True)
class Disruption:
    """Registry entry for one disruption kind."""

    disruption_id: str
    observing_category: ObservationCategory
    demanded_channels: frozenset[OccupationChannel]
    parseable: bool
    assist: Optional[str]
    triggers: tuple[Trigger, ...]

    def __post_init__(self) -> None:
        if self.parseable and not self.assist:
            raise ConfigError(
                f"parseable disruption {self.disruption_id!r} needs a canonical assist"
            )

    def observed(
        self, snapshot: Optional[AlignedSnapshot], flags: frozenset[PhysioNeed]
    ) -> bool:
        return any(t.fires(snapshot, flags) for t in self.triggers)


@dataclass(frozen=True)
class Conflict:
    """Overlap between a disruption's demanded channels and the occupied ones."""

    disruption_id: str
    action: str
    overlap: frozenset[OccupationChannel]
    context_key: str

    @staticmethod
    def make_key(action: str, disruption_id: str) -> str:
        return f"{action}|{disruption_id}"


def detect_conflict(
    profile: OccupationProfile, disruption: Disruption, observed: bool
) -> Optional[Conflict]:
    """A conflict exists iff observed, parseable, occupied and channels overlap."""
    if not observed or not disruption.parseable or not profile.occupied:
        return None
    overlap = profile.channels & disruption.demanded_channels
    if not overlap:
        return None
    action = disruption.assist
    assert action is not None  # guaranteed for parseable disruptions
    return Conflict(
        disruption_id=disruption.disruption_id,
        action=action,
        overlap=overlap,
        context_key=Conflict.make_key(action, disruption.disruption_id),
    )


@dataclass(frozen=True)
class DecisionFactors:
    """The three factors of the action probability."""

    parse_confidence: float  # confidence of the parse tree
    conflict: float  # 1.0 when a conflict is present, else 0.0
    action_preference: float  # learned probability for the context

    def product(self) -> float:
        return self.parse_confidence * self.conflict * self.action_preference

    def to_dict(self) -> dict:
        return {
            "parse_confidence": self.parse_confidence,
            "conflict": self.conflict,
            "action_preference": self.action_preference,
        }


@dataclass(frozen=True)
class ActionDecision:
    action: str
    factors: DecisionFactors
    joint_probability: float
    context_key: Optional[str] = None
    commands: tuple["ActionCommand", ...] = ()

    @property
    def acted(self) -> bool:
        return self.action != NO_ACTION


def decide(
    tree: Optional[ParseTree],
    conflict: Optional[Conflict],
    prefs: PreferenceStore,
    action_threshold: float = 0.5,
) -> ActionDecision:
    """Evaluate the factorized probability and pick the canonical assist or nothing.

    Parse confidence is the product of the selected resolved terminals'
    confidences (1.0 throughout the deterministic simulation). Missing
    preference contexts initialize to the store's default logit.
    """
    if not 0.0 <= action_threshold < 1.0:
        raise ValueError("action threshold must lie in [0, 1)")
    p_parse = tree.confidence() if tree is not None else 1.0
    if conflict is None:
        factors = DecisionFactors(parse_confidence=p_parse, conflict=0.0, action_preference=0.0)
        return ActionDecision(action=NO_ACTION, factors=factors, joint_probability=factors.product())
    p_action = prefs.probability(conflict.context_key)
    factors = DecisionFactors(parse_confidence=p_parse, conflict=1.0, action_preference=p_action)
    joint = factors.product()
    action = conflict.action if joint >= action_threshold else NO_ACTION
    return ActionDecision(
        action=action,
        factors=factors,
        joint_probability=joint,
        context_key=conflict.context_key,
    )


# ---------------------------------------------------------------------------
# Joint-action dispatch
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ActionCommand:
    """One embodiment command; paired delivery/render commands share a pairing id."""

    channel: ActuatorChannel
    payload: str
    pairing_id: Optional[str] = None
    delivery: bool = False

    def to_dict(self) -> dict:
        return {
            "channel": self.channel.value,
            "payload": self.payload,
            "pairing_id": self.pairing_id,
            "delivery": self.delivery,
        }


@dataclass(frozen=True)
class CommandTemplate:
    channel: ActuatorChannel
    payload: str
    pair: Optional[str] = None  # commands sharing a pair tag get one pairing id
    delivery: bool = False


AssistBundles = Mapping[str, tuple[CommandTemplate, ...]]


def bundles_from_dict(data: Mapping[str, Sequence[Mapping]]) -> dict[str, tuple[CommandTemplate, ...]]:
    out: dict[str, tuple[CommandTemplate, ...]] = {}
    for action, entries in data.items():
        out[action] = tuple(
            CommandTemplate(
                channel=ActuatorChannel(e["channel"]),
                payload=e["payload"],
                pair=e.get("pair"),
                delivery=bool(e.get("delivery", False)),
            )
            for e in entries
        )
    return out


def bundles_to_dict(bundles: AssistBundles) -> dict:
    out: dict[str, list] = {}
    for action, templates in bundles.items():
        rows = []
        for t in templates:
            row: dict = {"channel": t.channel.value, "payload": t.payload}
            if t.pair:
                row["pair"] = t.pair
            if t.delivery:
                row["delivery"] = True
            rows.append(row)
        out[action] = rows
    return out


class MockActuator:
    """Records every command it receives, for inspection by the harness."""

    def __init__(self, channel: ActuatorChannel):
        self.channel = channel
        self.commands: list[ActionCommand] = []

    def send(self, command: ActionCommand) -> None:
        self.commands.append(command)


class ActuatorRegistry:
    """One actuator per embodiment channel plus a deterministic pairing counter."""

    def __init__(self, actuators: Iterable[MockActuator] = ()):
        self.actuators: dict[ActuatorChannel, MockActuator] = {
            a.channel: a for a in actuators
        }
        self.log: list[ActionCommand] = []
        self._pairing_counter = itertools.count(1)

    @classmethod
    def with_mocks(cls) -> "ActuatorRegistry":
        return cls(MockActuator(channel) for channel in ActuatorChannel)

    def actuator(self, channel: ActuatorChannel) -> MockActuator:
        try:
            return self.actuators[channel]
        except KeyError:
            raise DispatchError(f"no actuator registered for channel {channel.value!r}") from None

    def next_pairing_id(self, action: str, tag: str) -> str:
        return f"{action}:{tag}#{next(self._pairing_counter)}"

    def all_commands(self) -> list[ActionCommand]:
        """Every dispatched command in send order."""
        return list(self.log)


def dispatch(
    decision: ActionDecision,
    registry: ActuatorRegistry,
    bundles: AssistBundles,
) -> list[ActionCommand]:
    """Send the decision's command bundle to the actuators and return it."""
    if not decision.acted:
        return []
    templates = bundles.get(decision.action)
    if templates is None:
        raise ConfigError(f"no command bundle registered for action {decision.action!r}")
    pairing_ids: dict[str, str] = {}
    commands: list[ActionCommand] = []
    for t in templates:
        pairing_id = None
        if t.pair is not None:
            if t.pair not in pairing_ids:
                pairing_ids[t.pair] = registry.next_pairing_id(decision.action, t.pair)
            pairing_id = pairing_ids[t.pair]
        commands.append(
            ActionCommand(
                channel=t.channel, payload=t.payload, pairing_id=pairing_id, delivery=t.delivery
            )
        )
    for command in commands:
        registry.actuator(command.channel).send(command)
        registry.log.append(command)
    return commands


def disruptions_from_dict(data: Mapping[str, Mapping]) -> dict[str, Disruption]:
    out: dict[str, Disruption] = {}
    for did, entry in data.items():
        triggers = []
        for raw in entry["triggers"]:
            triggers.append(
                Trigger(
                    kind=raw["kind"],
                    fact_id=raw.get("fact"),
                    value=raw.get("value"),
                    need=PhysioNeed(raw["need"]) if "need" in raw else None,
                )
            )
        out[did] = Disruption(
            disruption_id=did,
            observing_category=ObservationCategory(entry["category"]),
            demanded_channels=frozenset(OccupationChannel(c) for c in entry["demands"]),
            parseable=bool(entry["parseable"]),
            assist=entry.get("assist"),
            triggers=tuple(triggers),
        )
    return out


def disruptions_to_dict(disruptions: Mapping[str, Disruption]) -> dict:
    out: dict[str, dict] = {}
    for did, d in disruptions.items():
        triggers = []
        for t in d.triggers:
            raw: dict = {"kind": t.kind}
            if t.fact_id is not None:
                raw["fact"] = t.fact_id
            if t.value is not None:
                raw["value"] = t.value
            if t.need is not None:
                raw["need"] = t.need.value
            triggers.append(raw)
        out[did] = {
            "category": d.observing_category.value,
            "demands": sorted(c.value for c in d.demanded_channels),
            "parseable": d.parseable,
            "assist": d.assist,
            "triggers": triggers,
        }
    return out

"""And-Or-Graph of the joint observation, pruning, and occupation voting.

The graph joins a user half (four occupation components: hands, speaking,
visual, auditory) with an environment half (virtual and physical context).
Pruning against an aligned snapshot yields a parse tree: at every Or-node
exactly one child is kept, chosen by the strongest available evidence
(positive beats resolved-negative beats unknown, ties broken by child order).
The selected occupation terminals then vote for the overall occupation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

from .datamanager import AlignedSnapshot
from .observation import (
    ActivityMap,
    ConfigError,
    DeviceEnvironment,
    PhysioNeed,
    Registry,
)


class NodeKind(str, Enum):
    AND = "and"
    OR = "or"
    TERMINAL = "terminal"


class Side(str, Enum):
    USER = "user"
    ENVIRONMENT = "environment"


class EnvTag(str, Enum):
    PHYSICAL = "physical"
    VIRTUAL = "virtual"


class OccupationChannel(str, Enum):
    """The four user resource channels: hands/speaking input, visual/auditory output."""

    HANDS = "hands"
    SPEAKING = "speaking"
    VISUAL = "visual"
    AUDITORY = "auditory"


INPUT_CHANNELS = frozenset({OccupationChannel.HANDS, OccupationChannel.SPEAKING})
OUTPUT_CHANNELS = frozenset({OccupationChannel.VISUAL, OccupationChannel.AUDITORY})


class TerminalState(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Evidence:
    """How a terminal resolves against a snapshot slot or a physiological need.

    Modes: ``equals`` / ``not_equals`` compare the payload; ``is_true`` tests a
    boolean payload; ``above`` / ``at_most`` compare numerics; ``class_in``
    maps the payload through the activity table first; ``physio`` reads the
    named need's assessment instead of a slot.
    """

    mode: str
    fact_id: Optional[str] = None
    value: Union[str, int, bool, None, tuple] = None
    environment: Optional[DeviceEnvironment] = None
    need: Optional[PhysioNeed] = None

    _MODES = ("equals", "not_equals", "is_true", "above", "at_most", "class_in", "physio")

    def __post_init__(self) -> None:
        if self.mode not in self._MODES:
            raise ConfigError(f"unknown evidence mode {self.mode!r}")
        if self.mode == "physio":
            if self.need is None:
                raise ConfigError("physio evidence requires a need")
        elif self.fact_id is None:
            raise ConfigError(f"evidence mode {self.mode!r} requires a fact id")
        if self.mode == "class_in" and self.environment is None:
            raise ConfigError("class_in evidence requires an environment (pc or vr)")


@dataclass(frozen=True)
class AogNode:
    node_id: str
    kind: NodeKind
    side: Side
    children: tuple[str, ...] = ()
    env_tag: Optional[EnvTag] = None
    channel: Optional[OccupationChannel] = None
    votes: bool = False
    evidence: Optional[Evidence] = None
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if self.kind is NodeKind.TERMINAL:
            if self.children:
                raise ConfigError(f"terminal {self.node_id!r} must not have children")
            if self.evidence is None:
                raise ConfigError(f"terminal {self.node_id!r} needs an evidence rule")
        else:
            if not self.children:
                raise ConfigError(f"{self.kind.value}-node {self.node_id!r} needs children")
            if self.evidence is not None:
                raise ConfigError(f"non-terminal {self.node_id!r} cannot carry evidence")


class Graph:
    """Validated, immutable And-Or graph."""

    def __init__(self, nodes: Iterable[AogNode], root_id: str):
        self.nodes: dict[str, AogNode] = {}
        for node in nodes:
            if node.node_id in self.nodes:
                raise ConfigError(f"duplicate node id {node.node_id!r}")
            self.nodes[node.node_id] = node
        if root_id not in self.nodes:
            raise ConfigError(f"root node {root_id!r} missing")
        self.root_id = root_id
        self._validate()

    def _validate(self) -> None:
        # acyclicity, dangling references, reachability
        seen: set[str] = set()
        on_path: set[str] = set()

        def visit(node_id: str) -> None:
            if node_id in on_path:
                raise ConfigError(f"cycle through node {node_id!r}")
            if node_id in seen:
                return
            on_path.add(node_id)
            node = self.nodes.get(node_id)
            if node is None:
                raise ConfigError(f"dangling child reference {node_id!r}")
            for child in node.children:
                visit(child)
            on_path.discard(node_id)
            seen.add(node_id)

        visit(self.root_id)
        unreachable = set(self.nodes) - seen
        if unreachable:
            raise ConfigError(f"unreachable nodes: {sorted(unreachable)}")
        root = self.nodes[self.root_id]
        if root.kind is not NodeKind.AND or len(root.children) != 2:
            raise ConfigError("root must be an And-node joining the user and environment halves")
        sides = {self.nodes[c].side for c in root.children}
        if sides != {Side.USER, Side.ENVIRONMENT}:
            raise ConfigError("root children must cover the user and environment sides")

    def terminals(self) -> list[AogNode]:
        return [n for n in self.nodes.values() if n.kind is NodeKind.TERMINAL]

    def user_components(self) -> list[str]:
        root = self.nodes[self.root_id]
        for child_id in root.children:
            if self.nodes[child_id].side is Side.USER:
                return list(self.nodes[child_id].children)
        return []

    def validate_against(self, registry: Registry) -> None:
        """Every fact-referencing terminal must resolve in the registry."""
        for term in self.terminals():
            ev = term.evidence
            assert ev is not None
            if ev.mode != "physio":
                registry.spec_for_fact(ev.fact_id)  # raises ConfigError when unknown

    # -- serialization ------------------------------------------------------

    @classmethod
    def from_dict(cls, data: Mapping) -> "Graph":
        nodes = []
        for entry in data["nodes"]:
            evidence = None
            if "evidence" in entry:
                raw = dict(entry["evidence"])
                if "environment" in raw:
                    raw["environment"] = DeviceEnvironment(raw["environment"])
                if "need" in raw:
                    raw["need"] = PhysioNeed(raw["need"])
                if "fact" in raw:
                    raw["fact_id"] = raw.pop("fact")
                if isinstance(raw.get("value"), list):
                    raw["value"] = tuple(raw["value"])
                evidence = Evidence(**raw)
            nodes.append(
                AogNode(
                    node_id=entry["id"],
                    kind=NodeKind(entry["kind"]),
                    side=Side(entry["side"]),
                    children=tuple(entry.get("children", ())),
                    env_tag=EnvTag(entry["env"]) if "env" in entry else None,
                    channel=OccupationChannel(entry["channel"]) if "channel" in entry else None,
                    votes=bool(entry.get("votes", False)),
                    evidence=evidence,
                    confidence=float(entry.get("confidence", 1.0)),
                )
            )
        return cls(nodes, root_id=data["root"])

    def to_dict(self) -> dict:
        entries = []
        for node in self.nodes.values():
            entry: dict = {"id": node.node_id, "kind": node.kind.value, "side": node.side.value}
            if node.children:
                entry["children"] = list(node.children)
            if node.env_tag is not None:
                entry["env"] = node.env_tag.value
            if node.channel is not None:
                entry["channel"] = node.channel.value
            if node.votes:
                entry["votes"] = True
            if node.evidence is not None:
                ev = node.evidence
                raw: dict = {"mode": ev.mode}
                if ev.fact_id is not None:
                    raw["fact"] = ev.fact_id
                if ev.value is not None:
                    raw["value"] = list(ev.value) if isinstance(ev.value, tuple) else ev.value
                if ev.environment is not None:
                    raw["environment"] = ev.environment.value
                if ev.need is not None:
                    raw["need"] = ev.need.value
                entry["evidence"] = raw
            if node.confidence != 1.0:
                entry["confidence"] = node.confidence
            entries.append(entry)
        return {"root": self.root_id, "nodes": entries}


def load_graph(path: Union[str, Path]) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        return Graph.from_dict(json.load(fh))


def build_default_aog() -> Graph:
    """The canonical graph shipped with the package (see data/aog.json)."""
    text = resources.files("jointobs.data").joinpath("aog.json").read_text(encoding="utf-8")
    return Graph.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Pruning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParseTree:
    """The pruned graph instance for one snapshot.

    ``selected`` lists the node ids kept by pruning (exactly one child per
    Or-node, all children per And-node). ``states`` records the evidence
    verdict for every terminal, selected or not; unknown means the backing
    sensor was inactive or missing.
    """

    graph: Graph
    selected: frozenset[str]
    states: Mapping[str, TerminalState]

    def selected_terminals(self) -> list[AogNode]:
        return [
            node
            for node in self.graph.nodes.values()
            if node.kind is NodeKind.TERMINAL and node.node_id in self.selected
        ]

    def state_of(self, node_id: str) -> TerminalState:
        return self.states[node_id]

    def confidence(self) -> float:
        """Product of confidences over resolved selected terminals."""
        p = 1.0
        for node in self.selected_terminals():
            if self.states[node.node_id] is not TerminalState.UNKNOWN:
                p *= node.confidence
        return p

    def summary(self) -> dict:
        pos = sorted(
            n.node_id
            for n in self.selected_terminals()
            if self.states[n.node_id] is TerminalState.POSITIVE
        )
        neg = sorted(
            n.node_id
            for n in self.selected_terminals()
            if self.states[n.node_id] is TerminalState.NEGATIVE
        )
        return {"positive": pos, "negative": neg}


def _eval_terminal(
    node: AogNode,
    snapshot: Optional[AlignedSnapshot],
    physio: Mapping[PhysioNeed, Optional[bool]],
    activity_map: ActivityMap,
) -> TerminalState:
    ev = node.evidence
    assert ev is not None
    if ev.mode == "physio":
        verdict = physio.get(ev.need)
        if verdict is None:
            return TerminalState.UNKNOWN
        return TerminalState.POSITIVE if verdict else TerminalState.NEGATIVE
    slot = snapshot.slot_for_fact(ev.fact_id) if snapshot is not None else None
    if slot is None or not slot.is_active or slot.fact is None:
        return TerminalState.UNKNOWN
    payload = slot.fact.payload
    if ev.mode == "equals":
        hit = payload == ev.value
    elif ev.mode == "not_equals":
        hit = payload != ev.value
    elif ev.mode == "is_true":
        hit = payload is True
    elif ev.mode == "above":
        hit = isinstance(payload, (int, float)) and payload > ev.value
    elif ev.mode == "at_most":
        hit = isinstance(payload, (int, float)) and payload <= ev.value
    else:  # class_in
        cls = activity_map.classify(ev.environment, payload)
        wanted = ev.value if isinstance(ev.value, tuple) else (ev.value,)
        hit = cls.value in wanted
    return TerminalState.POSITIVE if hit else TerminalState.NEGATIVE


_RANK = {TerminalState.POSITIVE: 2, TerminalState.NEGATIVE: 1, TerminalState.UNKNOWN: 0}


def prune(
    graph: Graph,
    snapshot: Optional[AlignedSnapshot],
    physio: Union[Mapping[PhysioNeed, Optional[bool]], Iterable[PhysioNeed], None] = None,
    activity_map: Optional[ActivityMap] = None,
) -> ParseTree:
    """Deterministically prune the graph against a snapshot into a parse tree."""
    if physio is None:
        physio_map: Mapping[PhysioNeed, Optional[bool]] = {}
    elif isinstance(physio, Mapping):
        physio_map = physio
    else:  # a bare set of active needs: actives true, the rest unknown
        physio_map = {need: True for need in physio}
    amap = activity_map or ActivityMap()

    states: dict[str, TerminalState] = {}
    for node in graph.nodes.values():
        if node.kind is NodeKind.TERMINAL:
            states[node.node_id] = _eval_terminal(node, snapshot, physio_map, amap)

    agg: dict[str, TerminalState] = {}

    def aggregate(node_id: str) -> TerminalState:
        if node_id in agg:
            return agg[node_id]
        node = graph.nodes[node_id]
        if node.kind is NodeKind.TERMINAL:
            result = states[node_id]
        elif node.kind is NodeKind.OR:
            result = max((aggregate(c) for c in node.children), key=_RANK.__getitem__)
        else:
            child_states = [aggregate(c) for c in node.children]
            if any(s is TerminalState.POSITIVE for s in child_states):
                result = TerminalState.POSITIVE
            elif any(s is TerminalState.NEGATIVE for s in child_states):
                result = TerminalState.NEGATIVE
            else:
                result = TerminalState.UNKNOWN
        agg[node_id] = result
        return result

    selected: set[str] = set()

    def select(node_id: str) -> None:
        selected.add(node_id)
        node = graph.nodes[node_id]
        if node.kind is NodeKind.TERMINAL:
            return
        if node.kind is NodeKind.AND:
            for child in node.children:
                select(child)
            return
        # Or-node: strongest evidence wins, first child on ties.
        best = node.children[0]
        best_rank = _RANK[aggregate(best)]
        for child in node.children[1:]:
            rank = _RANK[aggregate(child)]
            if rank > best_rank:
                best, best_rank = child, rank
        select(best)

    select(graph.root_id)
    return ParseTree(graph=graph, selected=frozenset(selected), states=states)


# ---------------------------------------------------------------------------
# Occupation voting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OccupationProfile:
    """Outcome of terminal voting: per-channel flags and overall occupation."""

    occupied: bool
    fraction: float
    positives: int
    negatives: int
    weight: float
    threshold: float
    channels: frozenset[OccupationChannel]

    def to_dict(self) -> dict:
        return {
            "occupied": self.occupied,
            "fraction": self.fraction,
            "positives": self.positives,
            "negatives": self.negatives,
            "channels": sorted(c.value for c in self.channels),
        }


EMPTY_PROFILE = OccupationProfile(
    occupied=False,
    fraction=0.0,
    positives=0,
    negatives=0,
    weight=1.0,
    threshold=0.5,
    channels=frozenset(),
)


def vote_occupation(tree: ParseTree, weight: float = 1.0, threshold: float = 0.5) -> OccupationProfile:
    """Let the selected voting terminals vote; unknown terminals abstain.

    fraction = positives / (positives + weight * negatives); the user counts
    as occupied when at least one vote was cast and the fraction reaches the
    threshold. A channel is flagged iff some positive selected terminal is
    tagged with it.
    """
    if weight <= 0:
        raise ValueError("vote weight must be positive")
    if not 0.0 < threshold < 1.0:
        raise ValueError("occupation threshold must lie in (0, 1)")
    positives = 0
    negatives = 0
    channels: set[OccupationChannel] = set()
    for node in tree.selected_terminals():
        state = tree.states[node.node_id]
        if state is TerminalState.POSITIVE and node.channel is not None:
            channels.add(node.channel)
        if not node.votes:
            continue
        if state is TerminalState.POSITIVE:
            positives += 1
        elif state is TerminalState.NEGATIVE:
            negatives += 1
    total = positives + weight * negatives
    fraction = positives / total if total > 0 else 0.0
    occupied = (positives + negatives) > 0 and fraction >= threshold
    return OccupationProfile(
        occupied=occupied,
        fraction=fraction,
        positives=positives,
        negatives=negatives,
        weight=weight,
        threshold=threshold,
        channels=frozenset(channels),
    )

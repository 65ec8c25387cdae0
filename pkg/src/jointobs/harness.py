"""Episode engine and the two system evaluations.

run_episode drives one scripted scenario through the full pipeline: simulated
sensors -> data manager -> parse tree -> occupation vote -> conflict check ->
decision -> actuator dispatch. run_matrix sweeps the ablation test set and
run_learning repeats the visitor case against a simulated user to exercise the
preference store.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .aog import EMPTY_PROFILE, OccupationProfile, ParseTree, prune, vote_occupation
from .config import EngineConfig, default_config
from .datamanager import DataManager
from .decision import (
    NO_ACTION,
    ActuatorRegistry,
    Conflict,
    DecisionFactors,
    decide,
    detect_conflict,
    dispatch,
)
from .observation import (
    SENSOR_GROUPS,
    PhysioState,
    SensorGroup,
    physio_assessment,
    physio_flags,
    update_physio,
)
from .personalization import (
    FeedbackSign,
    PreferenceStore,
    SimulatedUser,
    feedback,
    simulated_feedback,
)
from .scenarios import (
    DISRUPTION_IDS,
    GROUP_IDS,
    OCCUPATION_IDS,
    Scenario,
    build_cell_scenario,
)

_PHYSIO_FACTS = frozenset({"pose", "hmd-active"})


@dataclass(frozen=True)
class DecisionRecord:
    """One scored decision event, the unit the accuracy metric counts."""

    disruption_id: str
    action: str
    ground_truth: str
    correct: bool
    observed: bool
    tick: int
    now: int
    snapshot_digest: str
    parse_summary: Mapping
    factors: DecisionFactors
    joint_probability: float
    commands: tuple = ()

    def to_dict(self) -> dict:
        return {
            "disruption": self.disruption_id,
            "action": self.action,
            "ground_truth": self.ground_truth,
            "correct": self.correct,
            "observed": self.observed,
            "tick": self.tick,
            "now": self.now,
            "snapshot_digest": self.snapshot_digest,
            "parse": dict(self.parse_summary),
            "factors": self.factors.to_dict(),
            "joint_probability": self.joint_probability,
            "commands": [c.to_dict() for c in self.commands],
        }


@dataclass
class EpisodeResult:
    records: list[DecisionRecord]
    actuators: ActuatorRegistry
    snapshots_emitted: int


def _make_store(config: EngineConfig) -> PreferenceStore:
    p = config.preference
    return PreferenceStore(
        step=p.step, initial_logit=p.initial_logit, z_min=p.z_min, z_max=p.z_max
    )


def run_episode(
    scenario: Scenario,
    group: SensorGroup,
    config: Optional[EngineConfig] = None,
    seed: int = 0,
    dropout: Optional[float] = None,
    preferences: Optional[PreferenceStore] = None,
    force_act: bool = False,
    rng_key: str = "",
) -> EpisodeResult:
    """Run one scenario under one sensor group; deterministic given the seed.

    ``force_act`` bypasses the action threshold once a conflict exists; the
    learning experiment uses it so every round elicits user feedback.
    """
    config = config or default_config()
    dropout_q = config.episode.dropout if dropout is None else dropout
    rng = random.Random(f"{seed}|{rng_key}|{scenario.key}|{group.group_id}")
    prefs = preferences if preferences is not None else _make_store(config)

    simulator = scenario.simulator(config.registry)
    manager = DataManager(config.registry, period=scenario.period)
    physio = PhysioState(thresholds=config.physio)
    actuators = ActuatorRegistry.with_mocks()

    snapshot = None
    tree: Optional[ParseTree] = None
    profile: OccupationProfile = EMPTY_PROFILE
    decided: set[str] = set()
    records: list[DecisionRecord] = []
    snapshots_emitted = 0

    for tick in range(scenario.duration):
        for reading in simulator.emit(tick, group):
            if dropout_q > 0.0 and rng.random() < dropout_q:
                continue  # this reading was lost, as if the sensor blinked
            if reading.fact.fact_id in _PHYSIO_FACTS:
                physio = update_physio(physio, reading.fact, reading.timestamp)
            manager.ingest(reading)
        now = (tick + 1) * scenario.period
        emitted = manager.tick(now)
        if emitted is not None:
            snapshot = emitted
            snapshots_emitted += 1
            tree = prune(
                config.graph,
                snapshot,
                physio_assessment(physio, now),
                config.activity_map,
            )
            profile = vote_occupation(
                tree, weight=config.vote_weight, threshold=config.occupation_threshold
            )
        flags = physio_flags(physio, now)
        disruption = config.disruptions.get(scenario.disruption_id)
        if disruption is None or disruption.disruption_id in decided:
            continue
        if not disruption.observed(snapshot, flags):
            continue
        conflict = detect_conflict(profile, disruption, observed=True)
        threshold = 0.0 if force_act else config.action_threshold
        decision = decide(tree, conflict, prefs, action_threshold=threshold)
        commands = tuple(dispatch(decision, actuators, config.assists))
        records.append(
            DecisionRecord(
                disruption_id=disruption.disruption_id,
                action=decision.action,
                ground_truth=scenario.ground_truth,
                correct=decision.action == scenario.ground_truth,
                observed=True,
                tick=tick,
                now=now,
                snapshot_digest=snapshot.digest() if snapshot else "",
                parse_summary=_summary(tree, profile),
                factors=decision.factors,
                joint_probability=decision.joint_probability,
                commands=commands,
            )
        )
        decided.add(disruption.disruption_id)

    if scenario.disruption_id in config.disruptions and scenario.disruption_id not in decided:
        # The disruption never reached the engine: the standing decision is
        # no-action, scored against the ground truth like any other.
        factors = DecisionFactors(parse_confidence=1.0, conflict=0.0, action_preference=0.0)
        records.append(
            DecisionRecord(
                disruption_id=scenario.disruption_id,
                action=NO_ACTION,
                ground_truth=scenario.ground_truth,
                correct=NO_ACTION == scenario.ground_truth,
                observed=False,
                tick=scenario.duration - 1,
                now=scenario.duration * scenario.period,
                snapshot_digest=snapshot.digest() if snapshot else "",
                parse_summary=_summary(tree, profile),
                factors=factors,
                joint_probability=factors.product(),
                commands=(),
            )
        )
    return EpisodeResult(records=records, actuators=actuators, snapshots_emitted=snapshots_emitted)


def _summary(tree: Optional[ParseTree], profile: OccupationProfile) -> dict:
    out = profile.to_dict()
    if tree is not None:
        out.update(tree.summary())
    return out


# ---------------------------------------------------------------------------
# Accuracy and the ablation matrix
# ---------------------------------------------------------------------------


def accuracy(records: Sequence[DecisionRecord]) -> Optional[float]:
    """Share of decisions matching the ground truth; None marks an empty cell."""
    if not records:
        return None
    return sum(1 for r in records if r.correct) / len(records)


@dataclass
class AccuracyMatrix:
    """Per-cell accuracies plus the decision logs they were computed from."""

    group_ids: tuple[str, ...]
    trials: int
    values: dict[tuple[str, str, str], Optional[float]] = field(default_factory=dict)
    logs: dict[tuple[str, str, str], list[DecisionRecord]] = field(default_factory=dict)

    def value(self, disruption_id: str, occupation_id: str, group_id: str) -> Optional[float]:
        return self.values[(disruption_id, occupation_id, group_id)]

    def cells(self) -> list[tuple[str, str, str]]:
        return sorted(self.values)


def run_matrix(
    config: Optional[EngineConfig] = None,
    seed: int = 0,
    groups: Optional[Sequence] = None,
    trials: Optional[int] = None,
    dropout: Optional[float] = None,
) -> AccuracyMatrix:
    """Fill the ablation matrix; deterministic cells are exactly 0.0 or 1.0.

    ``groups`` accepts group ids or SensorGroup objects, so custom category
    subsets can be swept alongside the ten standard ones.
    """
    config = config or default_config()
    n_trials = config.episode.trials if trials is None else trials
    if n_trials < 1:
        raise ValueError("trials must be at least 1")
    group_list = _resolve_groups(groups)
    matrix = AccuracyMatrix(group_ids=tuple(g.group_id for g in group_list), trials=n_trials)
    for disruption_id in DISRUPTION_IDS:
        for occupation_id in OCCUPATION_IDS:
            scenario = build_cell_scenario(occupation_id, disruption_id, config)
            for group in group_list:
                key = (disruption_id, occupation_id, group.group_id)
                records: list[DecisionRecord] = []
                for trial in range(n_trials):
                    result = run_episode(
                        scenario,
                        group,
                        config,
                        seed=seed,
                        dropout=dropout,
                        rng_key=f"trial{trial}",
                    )
                    records.extend(result.records)
                matrix.values[key] = accuracy(records)
                matrix.logs[key] = records
    return matrix


def _resolve_groups(groups: Optional[Sequence]) -> list[SensorGroup]:
    if groups is None:
        return [SENSOR_GROUPS[g] for g in GROUP_IDS]
    resolved: list[SensorGroup] = []
    for g in groups:
        if isinstance(g, SensorGroup):
            resolved.append(g)
        elif isinstance(g, str) and g in SENSOR_GROUPS:
            resolved.append(SENSOR_GROUPS[g])
        else:
            raise ValueError(f"unknown sensor group {g!r}")
    if not resolved:
        raise ValueError("at least one sensor group is required")
    return resolved


# ---------------------------------------------------------------------------
# Preference-learning experiment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LearningRound:
    round_number: int
    probability: float  # action preference before the round
    acted: bool
    feedback: FeedbackSign

    def to_dict(self) -> dict:
        return {
            "round": self.round_number,
            "probability": self.probability,
            "acted": self.acted,
            "feedback": self.feedback.value,
        }


@dataclass
class LearningTrajectory:
    user: str
    rounds: list[LearningRound]

    def probabilities(self) -> list[float]:
        return [r.probability for r in self.rounds]


def run_learning(
    user: SimulatedUser,
    rounds: int = 10,
    config: Optional[EngineConfig] = None,
    occupation_id: str = "O1",
    disruption_id: str = "D1",
    group_id: str = "S10",
    seed: int = 0,
) -> LearningTrajectory:
    """Repeat one episode against a simulated user and learn their preference.

    Every round the assist is carried out so the user can react; the recorded
    probability is the preference before the round. Rounds where no conflict
    arose would leave the store untouched.
    """
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    limit = user.rounds_supported()
    if limit is not None and rounds > limit:
        raise ValueError(
            f"user {user.personality} defines feedback for {limit} rounds, got {rounds}"
        )
    config = config or default_config()
    scenario = build_cell_scenario(occupation_id, disruption_id, config)
    group = SENSOR_GROUPS[group_id]
    disruption = config.disruptions[disruption_id]
    assert disruption.assist is not None
    context_key = Conflict.make_key(disruption.assist, disruption_id)

    store = _make_store(config)
    trajectory = LearningTrajectory(user=user.personality, rounds=[])
    for round_number in range(1, rounds + 1):
        probability = store.probability(context_key)
        result = run_episode(
            scenario,
            group,
            config,
            seed=seed,
            preferences=store,
            force_act=True,
            rng_key=f"round{round_number}",
        )
        acted = any(r.action != NO_ACTION for r in result.records)
        if acted:
            sign = simulated_feedback(user, round_number)
            feedback(store, context_key, sign)
        else:
            sign = FeedbackSign.NEUTRAL
        trajectory.rounds.append(
            LearningRound(
                round_number=round_number,
                probability=probability,
                acted=acted,
                feedback=sign,
            )
        )
    return trajectory

"""Per-context action preferences on a sigmoid curve, updated by user feedback.

Each decision context owns a logit; the action probability is sigmoid(logit).
Feedback moves the logit one step up or down along the curve and stops at the
configured bounds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union


def sigmoid(z: float) -> float:
    return 1.0 / (1.0 + math.exp(-z))


class FeedbackSign(str, Enum):
    POSITIVE = "positive"
    NEUTRAL = "neutral"
    NEGATIVE = "negative"

    @property
    def direction(self) -> int:
        if self is FeedbackSign.POSITIVE:
            return 1
        if self is FeedbackSign.NEGATIVE:
            return -1
        return 0


class PreferenceStore:
    """Map of context key -> logit, with step size, bounds and initial point."""

    def __init__(
        self,
        step: float = 1.0,
        initial_logit: float = 1.0,
        z_min: float = -6.0,
        z_max: float = 6.0,
        logits: Optional[Mapping[str, float]] = None,
    ):
        if step <= 0:
            raise ValueError("feedback step must be positive")
        if z_min >= z_max:
            raise ValueError("logit bounds must satisfy z_min < z_max")
        if not z_min <= initial_logit <= z_max:
            raise ValueError("initial logit must lie within the bounds")
        self.step = step
        self.initial_logit = initial_logit
        self.z_min = z_min
        self.z_max = z_max
        self._logits: dict[str, float] = dict(logits or {})
        for key, z in self._logits.items():
            self._logits[key] = self._clamp(z)

    def _clamp(self, z: float) -> float:
        return min(self.z_max, max(self.z_min, z))

    def logit(self, key: str) -> float:
        """Current logit for the context; missing keys initialize to the default."""
        if key not in self._logits:
            self._logits[key] = self.initial_logit
        return self._logits[key]

    def probability(self, key: str) -> float:
        return sigmoid(self.logit(key))


def action_probability(store: PreferenceStore, key: str) -> float:
    """sigmoid of the context's logit; auto-initializes missing keys."""
    return store.probability(key)


def feedback(store: PreferenceStore, key: str, sign: FeedbackSign) -> PreferenceStore:
    """Step the context's logit along the curve; clamps at the bounds."""
    z = store.logit(key)
    store._logits[key] = store._clamp(z + store.step * sign.direction)
    return store


def store_to_dict(store: PreferenceStore) -> dict:
    return {
        "step": store.step,
        "initial_logit": store.initial_logit,
        "bounds": [store.z_min, store.z_max],
        "logits": dict(sorted(store._logits.items())),
    }


def store_from_dict(data: Mapping) -> PreferenceStore:
    bounds = data.get("bounds", [-6.0, 6.0])
    return PreferenceStore(
        step=float(data.get("step", 1.0)),
        initial_logit=float(data.get("initial_logit", 1.0)),
        z_min=float(bounds[0]),
        z_max=float(bounds[1]),
        logits={k: float(v) for k, v in data.get("logits", {}).items()},
    )


def save_store(store: PreferenceStore, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(store_to_dict(store), indent=2, sort_keys=True) + "\n")


def load_store(path: Union[str, Path]) -> PreferenceStore:
    return store_from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Simulated users
# ---------------------------------------------------------------------------


_B_SCHEDULE_ROUNDS = 10


@dataclass(frozen=True)
class SimulatedUser:
    """Scripted feedback personality.

    A is annoyed by the assist on every round, C is satisfied on every round,
    and B is annoyed on rounds 1-3, neutral on rounds 4-7 and satisfied on
    rounds 8-10. A custom user carries an explicit per-round schedule.
    """

    personality: str
    schedule: tuple[FeedbackSign, ...] = ()

    @classmethod
    def standard(cls, personality: str) -> "SimulatedUser":
        name = personality.upper()
        if name not in {"A", "B", "C"}:
            raise ValueError(f"unknown simulated user {personality!r} (expected A, B or C)")
        return cls(personality=name)

    @classmethod
    def custom(cls, schedule: Sequence[Union[str, FeedbackSign]]) -> "SimulatedUser":
        signs = tuple(FeedbackSign(s) for s in schedule)
        if not signs:
            raise ValueError("custom feedback schedule must not be empty")
        return cls(personality="custom", schedule=signs)

    def rounds_supported(self) -> Optional[int]:
        if self.personality in {"A", "C"}:
            return None  # unbounded: "always" personalities
        if self.personality == "B":
            return _B_SCHEDULE_ROUNDS
        return len(self.schedule)


def simulated_feedback(user: SimulatedUser, round_number: int) -> FeedbackSign:
    """The user's scheduled reaction for an acted round (1-based).

    Rounds where the agent declined receive no update and are treated as
    neutral by the caller; this function only answers for acted rounds.
    """
    if round_number < 1:
        raise ValueError(f"round {round_number} out of range")
    limit = user.rounds_supported()
    if limit is not None and round_number > limit:
        raise ValueError(
            f"round {round_number} outside user {user.personality}'s {limit}-round schedule"
        )
    if user.personality == "A":
        return FeedbackSign.NEGATIVE
    if user.personality == "C":
        return FeedbackSign.POSITIVE
    if user.personality == "B":
        if round_number <= 3:
            return FeedbackSign.NEGATIVE
        if round_number <= 7:
            return FeedbackSign.NEUTRAL
        return FeedbackSign.POSITIVE
    return user.schedule[round_number - 1]

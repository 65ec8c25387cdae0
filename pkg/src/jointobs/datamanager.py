"""Clock-aligned fusion of heterogeneous sensor streams.

Readings arrive asynchronously; states are checked at each rising edge of a
periodic clock. A sensor that stayed silent for a full clock period is marked
inactive. Snapshots are forwarded downstream only when some slot's
(status, fact) pair actually changed.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional

from .observation import Fact, Registry, SensorReading

DEFAULT_PERIOD_MS = 20


class UnknownSensorError(ValueError):
    """Reading from a sensor that is not in the registry."""


class ClockGridError(ValueError):
    """tick() called off the clock grid or not after the previous edge."""


class SlotStatus(str, Enum):
    ACTIVE = "active"
    INACTIVE = "inactive"


@dataclass(frozen=True)
class SensorSlot:
    """Latest known state of one sensor at a clock edge."""

    sensor_id: str
    fact_id: str
    status: SlotStatus
    fact: Optional[Fact]
    last_seen: Optional[int]

    @property
    def is_active(self) -> bool:
        return self.status is SlotStatus.ACTIVE


@dataclass(frozen=True)
class AlignedSnapshot:
    """Per-sensor latest state at one clock edge; one slot per registered sensor."""

    tick: int
    now: int
    period: int
    slots: Mapping[str, SensorSlot]

    def slot_for_fact(self, fact_id: str) -> Optional[SensorSlot]:
        return self._by_fact.get(fact_id)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_fact", {s.fact_id: s for s in self.slots.values()})

    def digest(self) -> str:
        """Stable content hash over (sensor, status, fact) triples."""
        canonical = [
            (
                sid,
                slot.status.value,
                None if slot.fact is None else [slot.fact.fact_id, slot.fact.payload],
            )
            for sid, slot in sorted(self.slots.items())
        ]
        blob = json.dumps([self.tick, canonical], sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


class _MutableSlot:
    __slots__ = ("fact", "timestamp", "sequence", "last_seen")

    def __init__(self) -> None:
        self.fact: Optional[Fact] = None
        self.timestamp: Optional[int] = None
        self.sequence: Optional[int] = None
        self.last_seen: Optional[int] = None


class DataManager:
    """Aligns readings on the clock grid and emits change-only snapshots.

    ingest() may be called from several producers; tick() from a single
    consumer. The internal lock keeps slot updates linearizable.
    """

    def __init__(self, registry: Registry, period: int = DEFAULT_PERIOD_MS):
        if period <= 0:
            raise ValueError("clock period must be positive")
        self.registry = registry
        self.period = period
        self._slots: dict[str, _MutableSlot] = {sid: _MutableSlot() for sid in registry.sensor_ids()}
        self._fact_ids: dict[str, str] = {
            spec.sensor_id: spec.fact_id for spec in registry.sensors.values()
        }
        self._last_emitted_state: Optional[tuple] = None
        self._last_now: Optional[int] = None
        self._lock = threading.Lock()

    def ingest(self, reading: SensorReading) -> None:
        """Fold a reading into its slot; newest (timestamp, sequence) wins."""
        slot = self._slots.get(reading.sensor_id)
        if slot is None:
            raise UnknownSensorError(
                f"reading from unregistered sensor {reading.sensor_id!r} rejected"
            )
        with self._lock:
            key = (reading.timestamp, reading.sequence)
            if slot.sequence is not None and key <= (slot.timestamp, slot.sequence):
                return  # stale: keep the current state
            slot.fact = reading.fact
            slot.timestamp = reading.timestamp
            slot.sequence = reading.sequence
            slot.last_seen = reading.timestamp

    def tick(self, now: int) -> Optional[AlignedSnapshot]:
        """Evaluate slot states at a clock edge; return a snapshot only on change."""
        if now % self.period != 0:
            raise ClockGridError(f"tick at {now} ms is off the {self.period} ms clock grid")
        with self._lock:
            if self._last_now is not None and now <= self._last_now:
                raise ClockGridError(f"tick at {now} ms does not advance past {self._last_now} ms")
            self._last_now = now
            state = []
            slots: dict[str, SensorSlot] = {}
            for sensor_id, slot in self._slots.items():
                # Active iff a reading landed inside the last full period [now - T, now).
                active = slot.last_seen is not None and slot.last_seen >= now - self.period
                status = SlotStatus.ACTIVE if active else SlotStatus.INACTIVE
                state.append((sensor_id, status, slot.fact))
                slots[sensor_id] = SensorSlot(
                    sensor_id=sensor_id,
                    fact_id=self._fact_ids[sensor_id],
                    status=status,
                    fact=slot.fact,
                    last_seen=slot.last_seen,
                )
            state_key = tuple(state)
            if state_key == self._last_emitted_state:
                return None
            self._last_emitted_state = state_key
            return AlignedSnapshot(tick=now // self.period, now=now, period=self.period, slots=slots)

from __future__ import annotations

import random

import pytest

from jointobs.datamanager import (
    ClockGridError,
    DataManager,
    SlotStatus,
    UnknownSensorError,
)
from jointobs.observation import Fact, ObservationCategory, Registry, SensorReading


@pytest.fixture()
def registry() -> Registry:
    return Registry.from_dict(
        {
            "alpha": {"category": "PU", "sensor": "sensor-a", "kind": "int"},
            "beta": {"category": "VE", "sensor": "sensor-b", "kind": "int"},
            "gamma": {"category": "VU", "sensor": "sensor-c", "kind": "int"},
        }
    )


def reading(registry: Registry, fact_id: str, value: int, ts: int, seq: int) -> SensorReading:
    spec = registry.spec_for_fact(fact_id)
    return SensorReading(
        sensor_id=spec.sensor_id,
        category=spec.category,
        timestamp=ts,
        sequence=seq,
        fact=Fact(fact_id=fact_id, category=spec.category, payload=value),
    )


def test_last_write_wins_within_one_period(registry):
    m = DataManager(registry, period=20)
    m.ingest(reading(registry, "alpha", 1, ts=0, seq=0))
    m.ingest(reading(registry, "alpha", 2, ts=5, seq=1))
    snap = m.tick(20)
    assert snap is not None
    assert snap.slot_for_fact("alpha").fact.payload == 2


def test_stale_sequence_leaves_slot_unchanged(registry):
    m = DataManager(registry, period=20)
    m.ingest(reading(registry, "alpha", 2, ts=5, seq=3))
    m.ingest(reading(registry, "alpha", 1, ts=5, seq=2))  # out of order, stale
    snap = m.tick(20)
    assert snap.slot_for_fact("alpha").fact.payload == 2


def test_unregistered_sensor_rejected_with_diagnostic(registry):
    m = DataManager(registry, period=20)
    rogue = SensorReading(
        sensor_id="sensor-x",
        category=ObservationCategory.PE,
        timestamp=0,
        sequence=0,
        fact=Fact("alpha", ObservationCategory.PE, 1),
    )
    with pytest.raises(UnknownSensorError, match="sensor-x"):
        m.ingest(rogue)


def test_first_tick_always_emits(registry):
    m = DataManager(registry, period=20)
    assert m.tick(20) is not None


def test_silent_sensor_flips_inactive_after_one_full_period(registry):
    m = DataManager(registry, period=20)
    m.ingest(reading(registry, "alpha", 1, ts=0, seq=0))
    first = m.tick(20)
    assert first.slot_for_fact("alpha").status is SlotStatus.ACTIVE
    second = m.tick(40)  # nothing arrived in [20, 40)
    assert second is not None, "inactivity transition must be forwarded"
    assert second.slot_for_fact("alpha").status is SlotStatus.INACTIVE
    # the stale fact is retained on the inactive slot
    assert second.slot_for_fact("alpha").fact.payload == 1


def test_no_snapshot_without_change(registry):
    m = DataManager(registry, period=20)
    m.ingest(reading(registry, "alpha", 1, ts=0, seq=0))
    assert m.tick(20) is not None
    assert m.tick(40) is not None  # alpha turns inactive
    assert m.tick(60) is None
    assert m.tick(80) is None


def test_steady_stream_stays_active_and_quiet(registry):
    m = DataManager(registry, period=20)
    snaps = 0
    for tick in range(10):
        m.ingest(reading(registry, "alpha", 7, ts=tick * 20, seq=tick))
        if m.tick((tick + 1) * 20) is not None:
            snaps += 1
    assert snaps == 1  # only the first edge reports a change


def test_idle_stability_without_ingests(registry):
    m = DataManager(registry, period=20)
    emitted = [m.tick((i + 1) * 20) for i in range(5)]
    assert emitted[0] is not None
    assert all(s is None for s in emitted[1:])


def test_off_grid_tick_is_contract_violation(registry):
    m = DataManager(registry, period=20)
    with pytest.raises(ClockGridError, match="off the 20 ms"):
        m.tick(30)


def test_tick_must_advance(registry):
    m = DataManager(registry, period=20)
    m.tick(20)
    with pytest.raises(ClockGridError, match="advance"):
        m.tick(20)


def test_snapshot_has_one_slot_per_registered_sensor(registry):
    m = DataManager(registry, period=20)
    snap = m.tick(20)
    assert set(snap.slots) == {"sensor-a", "sensor-b", "sensor-c"}


def test_snapshot_ticks_strictly_increase(registry):
    m = DataManager(registry, period=20)
    ticks = []
    for i in range(6):
        if i % 2 == 0:
            m.ingest(reading(registry, "alpha", i, ts=i * 20, seq=i))
        snap = m.tick((i + 1) * 20)
        if snap is not None:
            ticks.append(snap.tick)
    assert ticks == sorted(set(ticks))


def test_arrival_order_permutation_yields_identical_snapshot(registry):
    rng = random.Random(7)
    for _ in range(100):
        batch = [
            reading(registry, "alpha", rng.randrange(10), ts=rng.randrange(20), seq=0),
            reading(registry, "beta", rng.randrange(10), ts=rng.randrange(20), seq=0),
            reading(registry, "gamma", rng.randrange(10), ts=rng.randrange(20), seq=0),
        ]
        m1 = DataManager(registry, period=20)
        m2 = DataManager(registry, period=20)
        for r in batch:
            m1.ingest(r)
        for r in reversed(batch):
            m2.ingest(r)
        s1, s2 = m1.tick(20), m2.tick(20)
        assert s1 == s2


def test_every_emitted_snapshot_differs_from_predecessor(registry):
    rng = random.Random(99)
    m = DataManager(registry, period=20)
    previous_state = None
    seqs = {"alpha": 0, "beta": 0, "gamma": 0}
    for tick in range(200):
        for fact_id in ("alpha", "beta", "gamma"):
            if rng.random() < 0.3:
                m.ingest(
                    reading(
                        registry,
                        fact_id,
                        rng.randrange(3),
                        ts=tick * 20 + rng.randrange(20),
                        seq=seqs[fact_id],
                    )
                )
                seqs[fact_id] += 1
        snap = m.tick((tick + 1) * 20)
        if snap is not None:
            state = tuple(
                (sid, slot.status, slot.fact) for sid, slot in sorted(snap.slots.items())
            )
            assert state != previous_state
            previous_state = state

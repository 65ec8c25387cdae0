from __future__ import annotations

from typing import Mapping

import pytest

from jointobs.config import EngineConfig, default_config
from jointobs.datamanager import AlignedSnapshot, SensorSlot, SlotStatus
from jointobs.observation import Payload


@pytest.fixture(scope="session")
def config() -> EngineConfig:
    return default_config()


def make_snapshot(
    config: EngineConfig,
    values: Mapping[str, Payload],
    stale: Mapping[str, Payload] | None = None,
    tick: int = 1,
    period: int = 20,
) -> AlignedSnapshot:
    """Build a snapshot directly: listed facts active, everything else inactive.

    ``stale`` entries keep their last fact but are flagged inactive, matching a
    sensor that went silent.
    """
    stale = stale or {}
    slots: dict[str, SensorSlot] = {}
    for fact_id, spec in config.registry.facts.items():
        if fact_id in values:
            fact = config.registry.make_fact(fact_id, values[fact_id])
            slots[spec.sensor_id] = SensorSlot(
                sensor_id=spec.sensor_id,
                fact_id=fact_id,
                status=SlotStatus.ACTIVE,
                fact=fact,
                last_seen=(tick - 1) * period,
            )
        elif fact_id in stale:
            fact = config.registry.make_fact(fact_id, stale[fact_id])
            slots[spec.sensor_id] = SensorSlot(
                sensor_id=spec.sensor_id,
                fact_id=fact_id,
                status=SlotStatus.INACTIVE,
                fact=fact,
                last_seen=None,
            )
        else:
            slots[spec.sensor_id] = SensorSlot(
                sensor_id=spec.sensor_id,
                fact_id=fact_id,
                status=SlotStatus.INACTIVE,
                fact=None,
                last_seen=None,
            )
    return AlignedSnapshot(tick=tick, now=tick * period, period=period, slots=slots)

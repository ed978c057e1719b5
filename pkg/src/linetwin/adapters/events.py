"""Command envelopes, lifecycle events, and telemetry samples."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

EVENT_KINDS = {"adapter_registered", "accepted", "started", "completed", "failed", "timeout"}
TERMINAL_KINDS = {"completed", "failed", "timeout"}

_command_counter = itertools.count(1)


def next_command_id(prefix: str = "cmd") -> str:
    return f"{prefix}-{next(_command_counter)}"


@dataclass
class CommandEnvelope:
    command_id: str
    capability_id: str
    params: dict = field(default_factory=dict)
    issued_at: float = 0.0
    timeout_s: float = 30.0


@dataclass(frozen=True)
class RunEvent:
    event_id: str
    command_id: str | None
    kind: str
    detail: str
    at: float

    @property
    def terminal(self) -> bool:
        return self.kind in TERMINAL_KINDS

    def to_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "command_id": self.command_id,
            "kind": self.kind,
            "detail": self.detail,
            "at": self.at,
        }


@dataclass(frozen=True)
class TelemetrySample:
    topic: str
    value: bool | int
    at: float

    def to_dict(self) -> dict:
        return {"topic": self.topic, "value": self.value, "at": self.at}


def telemetry_topic(plant_id: str, machine_id: str, signal_name: str) -> str:
    return f"plant/{plant_id}/{machine_id}/{signal_name}"

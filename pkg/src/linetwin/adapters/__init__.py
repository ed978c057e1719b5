from .base import Adapter, AdapterSpec, spawn_adapter
from .bus import EventBus, topic_matches
from .events import (
    CommandEnvelope,
    RunEvent,
    TERMINAL_KINDS,
    TelemetrySample,
    next_command_id,
    telemetry_topic,
)
from .modbus_adapter import ModbusAdapter
from .robot_adapter import RobotAdapter

__all__ = [
    "Adapter",
    "AdapterSpec",
    "CommandEnvelope",
    "EventBus",
    "ModbusAdapter",
    "RobotAdapter",
    "RunEvent",
    "TERMINAL_KINDS",
    "TelemetrySample",
    "next_command_id",
    "spawn_adapter",
    "telemetry_topic",
    "topic_matches",
]

"""Adapter lifecycle shared by the protocol-specific implementations.

An adapter owns one controller connection, runs at most one command
handshake per machine, and polls telemetry on the side. Lifecycle events go
to the bus; `wait_terminal` lets the engine await a command's outcome.
"""

from __future__ import annotations

import asyncio
import itertools
import logging
from dataclasses import dataclass, field

from ..plantconfig.model import CapabilityDescriptor, ControllerDescriptor, MachineDescriptor
from ..virtualplant.clock import SimClock
from .bus import EventBus
from .events import CommandEnvelope, RunEvent

log = logging.getLogger(__name__)

SNAPSHOT_EVERY_N_POLLS = 10


@dataclass
class AdapterSpec:
    adapter_id: str
    plant_id: str
    controller: ControllerDescriptor
    machines: list[MachineDescriptor]
    capabilities: list[CapabilityDescriptor]
    mode: str = "virtual"  # virtual | physical
    host: str = ""
    port: int = 0
    poll_interval_ms: int = 250
    connect_retries: int = 3
    retry_delay_s: float = 0.2

    @property
    def endpoint(self) -> tuple[str, int]:
        host = self.host or self.controller.host
        port = self.port or self.controller.port
        return host, port


class Adapter:
    def __init__(self, spec: AdapterSpec, bus: EventBus, clock: SimClock,
                 wire_tap: list | None = None):
        self.spec = spec
        self.bus = bus
        self.clock = clock
        self.wire_tap = wire_tap
        self.registered = False
        self.capabilities = {c.capability_id: c for c in spec.capabilities}
        self._event_seq = itertools.count(1)
        self._in_flight: dict[str, str] = {}  # machine_id -> command_id
        self._terminal: dict[str, asyncio.Future] = {}
        self._tasks: list[asyncio.Task] = []
        self._poll_task: asyncio.Task | None = None
        self._stopped = False

    # -- lifecycle ---------------------------------------------------------

    async def start(self) -> "Adapter":
        attempts = self.spec.connect_retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            try:
                await self._connect()
                break
            except OSError as exc:
                last_error = exc
                if attempt + 1 < attempts:
                    await asyncio.sleep(self.spec.retry_delay_s)
        else:
            self.emit(None, "failed", f"registration failed: {last_error}")
            return self
        self.registered = True
        self.emit(None, "adapter_registered", f"{self.spec.controller.kind} adapter online")
        self._poll_task = asyncio.create_task(self._poll_loop())
        return self

    async def stop(self) -> None:
        self._stopped = True
        if self._poll_task is not None:
            self._poll_task.cancel()
            try:
                await self._poll_task
            except asyncio.CancelledError:
                pass
        for task in self._tasks:
            task.cancel()
        for task in self._tasks:
            try:
                await task
            except (asyncio.CancelledError, Exception):
                pass
        await self._disconnect()

    # -- command plane -----------------------------------------------------

    async def submit(self, cmd: CommandEnvelope) -> tuple[bool, str]:
        """Returns (accepted, reason). Exactly one terminal event follows acceptance."""
        capability = self.capabilities.get(cmd.capability_id)
        if capability is None:
            return False, "wrong_adapter"
        problem = self._check_params(capability, cmd.params)
        if problem:
            return False, problem
        if capability.machine_id in self._in_flight:
            return False, "busy"
        if not self.registered:
            return False, "not_registered"
        self._in_flight[capability.machine_id] = cmd.command_id
        future: asyncio.Future = asyncio.get_running_loop().create_future()
        self._terminal[cmd.command_id] = future
        self.emit(cmd.command_id, "accepted", capability.capability_id)
        task = asyncio.create_task(self._run_handshake(cmd, capability))
        self._tasks.append(task)
        return True, ""

    async def wait_terminal(self, command_id: str) -> RunEvent:
        future = self._terminal.get(command_id)
        if future is None:
            raise KeyError(f"unknown command {command_id}")
        return await future

    def busy_machines(self) -> set[str]:
        return set(self._in_flight)

    def _check_params(self, capability: CapabilityDescriptor, params: dict) -> str | None:
        declared = {p.name: p for p in capability.params}
        for name, value in params.items():
            spec = declared.get(name)
            if spec is None:
                return f"invalid_params: unknown parameter {name!r}"
            if spec.data_kind == "integer" and not isinstance(value, int):
                return f"invalid_params: {name} must be an integer"
            if spec.data_kind == "boolean" and not isinstance(value, bool):
                return f"invalid_params: {name} must be a boolean"
            if spec.data_kind == "integer" and spec.range is not None:
                low, high = spec.range
                if not low <= value <= high:
                    return f"invalid_params: {name}={value} outside {low}..{high}"
        return None

    def _finish(self, cmd: CommandEnvelope, capability: CapabilityDescriptor,
                kind: str, detail: str) -> None:
        self._in_flight.pop(capability.machine_id, None)
        event = self.emit(cmd.command_id, kind, detail)
        future = self._terminal.get(cmd.command_id)
        if future is not None and not future.done():
            future.set_result(event)

    def emit(self, command_id: str | None, kind: str, detail: str) -> RunEvent:
        event = RunEvent(
            event_id=f"{self.spec.adapter_id}-e{next(self._event_seq)}",
            command_id=command_id,
            kind=kind,
            detail=detail,
            at=self.clock.now_s,
        )
        self.bus.publish_event(event)
        return event

    def tap(self, *op) -> None:
        if self.wire_tap is not None:
            self.wire_tap.append(op)

    # -- to be provided by protocol implementations -------------------------

    async def _connect(self) -> None:
        raise NotImplementedError

    async def _disconnect(self) -> None:
        raise NotImplementedError

    async def _run_handshake(self, cmd: CommandEnvelope, capability: CapabilityDescriptor) -> None:
        raise NotImplementedError

    async def _poll_loop(self) -> None:
        raise NotImplementedError


async def spawn_adapter(spec: AdapterSpec, bus: EventBus, clock: SimClock | None = None,
                        wire_tap: list | None = None) -> Adapter:
    """Create and start the adapter matching the controller's protocol."""
    from .modbus_adapter import ModbusAdapter
    from .robot_adapter import RobotAdapter

    clock = clock or SimClock()
    if spec.controller.kind == "modbus_plc":
        adapter: Adapter = ModbusAdapter(spec, bus, clock, wire_tap)
    elif spec.controller.kind == "robot_gateway":
        adapter = RobotAdapter(spec, bus, clock, wire_tap)
    else:
        raise ValueError(f"no adapter for controller kind {spec.controller.kind!r}")
    return await adapter.start()

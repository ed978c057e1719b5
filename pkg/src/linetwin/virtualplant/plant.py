"""Virtual plant: one Modbus TCP listener per PLC controller and one
newline-JSON gateway listener per robot controller, all stepping machine
behaviors on a shared simulation clock.
"""

from __future__ import annotations

import asyncio
import json
import logging

from ..plantconfig.model import BUSY_OFFSET, PlantConfig, RobotInvocation
from .behaviors import MachineBehavior, behavior_for, init_behavior_state, step_behavior
from .clock import REALTIME_SCALED, STEPPED, SimClock
from .modbus_core import ModbusFrameError, PlcState, modbus_handle_adu
from .robot import RobotGatewayState, robot_gateway_advance, robot_gateway_handle

log = logging.getLogger(__name__)

DEFAULT_TICK_S = 0.05


class PlantStartupError(Exception):
    pass


class _ModbusUnit:
    def __init__(self, controller_id: str, unit_id: int):
        self.controller_id = controller_id
        self.plc = PlcState(unit_id=unit_id)
        self.behaviors: list[MachineBehavior] = []
        self.lock = asyncio.Lock()


class _GatewayUnit:
    def __init__(self, controller_id: str, state: RobotGatewayState):
        self.controller_id = controller_id
        self.state = state
        self.lock = asyncio.Lock()
        self.writers: set[asyncio.StreamWriter] = set()


class VirtualPlant:
    """Emulated controllers for one plant config; also the PlantHandle."""

    def __init__(
        self,
        config: PlantConfig,
        clock: SimClock | None = None,
        use_config_ports: bool = False,
        bind_host: str = "127.0.0.1",
        tick_s: float = DEFAULT_TICK_S,
    ):
        self.config = config
        self.clock = clock or SimClock(REALTIME_SCALED, 1.0)
        self.use_config_ports = use_config_ports
        self.bind_host = bind_host
        self.tick_s = tick_s
        self.endpoints: dict[str, tuple[str, int]] = {}
        self._servers: list[asyncio.base_events.Server] = []
        self._modbus_units: list[_ModbusUnit] = []
        self._gateway_units: list[_GatewayUnit] = []
        self._ticker: asyncio.Task | None = None
        self._last_tick_s = 0.0

    async def start(self) -> "VirtualPlant":
        try:
            for controller in self.config.controllers:
                port = controller.port if self.use_config_ports else 0
                if controller.kind == "modbus_plc":
                    unit = self._build_modbus_unit(controller)
                    handler = self._modbus_handler(unit)
                    self._modbus_units.append(unit)
                else:
                    unit = self._build_gateway_unit(controller)
                    handler = self._gateway_handler(unit)
                    self._gateway_units.append(unit)
                try:
                    server = await asyncio.start_server(handler, self.bind_host, port)
                except OSError as exc:
                    raise PlantStartupError(
                        f"controller {controller.controller_id}: cannot bind {self.bind_host}:{port} ({exc})"
                    ) from exc
                self._servers.append(server)
                host, bound_port = server.sockets[0].getsockname()[:2]
                self.endpoints[controller.controller_id] = (host, bound_port)
        except PlantStartupError:
            await self.stop()
            raise
        self._last_tick_s = self.clock.now_s
        if self.clock.mode == REALTIME_SCALED:
            self._ticker = asyncio.create_task(self._run_ticker())
        return self

    def _build_modbus_unit(self, controller) -> _ModbusUnit:
        unit = _ModbusUnit(controller.controller_id, controller.protocol_params.get("unit_id", 1))
        behavior_map = self.config.metadata.get("behaviors", {})
        for machine in self.config.controller_machines(controller.controller_id):
            capabilities = [
                c for c in self.config.machine_capabilities(machine.machine_id)
                if c.controller_id == controller.controller_id
            ]
            if not capabilities:
                continue
            first = capabilities[0].invocation
            base = first.busy.address - BUSY_OFFSET
            kind = behavior_map.get(machine.machine_id) or (
                "warehouse" if machine.kind == "warehouse" else "generic")
            behavior = behavior_for(machine.machine_id, kind, base, capabilities)
            init_behavior_state(behavior, unit.plc)
            unit.behaviors.append(behavior)
        return unit

    def _build_gateway_unit(self, controller) -> _GatewayUnit:
        durations: dict[str, float] = {}
        for cap in self.config.capabilities:
            if cap.controller_id == controller.controller_id and isinstance(cap.invocation, RobotInvocation):
                durations[cap.invocation.command] = cap.nominal_duration_s
        state = RobotGatewayState(
            command_set=list(controller.protocol_params.get("command_set", ["move", "home"])),
            home_position=controller.protocol_params.get("home_position", "home"),
            durations=durations,
        )
        return _GatewayUnit(controller.controller_id, state)

    def _modbus_handler(self, unit: _ModbusUnit):
        async def handle(reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
            try:
                while True:
                    header = await reader.readexactly(7)
                    length = int.from_bytes(header[4:6], "big")
                    if not 2 <= length <= 260:
                        log.debug("modbus %s: bad MBAP length %d, closing", unit.controller_id, length)
                        break
                    body = await reader.readexactly(length - 1)
                    async with unit.lock:
                        try:
                            response = modbus_handle_adu(header + body, unit.plc)
                        except ModbusFrameError as exc:
                            log.debug("modbus %s: %s, closing", unit.controller_id, exc)
                            break
                    writer.write(response)
                    await writer.drain()
            except (asyncio.IncompleteReadError, ConnectionError):
                pass
            finally:
                writer.close()

        return handle

    def _gateway_handler(self, unit: _GatewayUnit):
        async def handle(reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
            unit.writers.add(writer)
            try:
                while True:
                    line = await reader.readline()
                    if not line:
                        break
                    try:
                        msg = json.loads(line)
                    except json.JSONDecodeError:
                        reply = {"type": "rejected", "reason": "bad_message"}
                    else:
                        async with unit.lock:
                            reply = robot_gateway_handle(msg, unit.state, self.clock.now_s)
                    writer.write(json.dumps(reply).encode() + b"\n")
                    await writer.drain()
            except (ConnectionError, asyncio.IncompleteReadError):
                pass
            finally:
                unit.writers.discard(writer)
                writer.close()

        return handle

    async def _advance(self, now_s: float, dt_s: float) -> None:
        for unit in self._modbus_units:
            async with unit.lock:
                for behavior in unit.behaviors:
                    step_behavior(behavior, unit.plc, dt_s)
        for unit in self._gateway_units:
            async with unit.lock:
                events = robot_gateway_advance(unit.state, now_s)
            for event in events:
                self._broadcast(unit, event)

    def _broadcast(self, unit: _GatewayUnit, event: dict) -> None:
        payload = json.dumps(event).encode() + b"\n"
        for writer in list(unit.writers):
            try:
                writer.write(payload)
            except ConnectionError:
                unit.writers.discard(writer)

    async def step(self, dt_s: float) -> None:
        """Advance the stepped clock and all machine behaviors by dt_s."""
        if self.clock.mode != STEPPED:
            raise RuntimeError("step() requires a stepped clock")
        new_now = self.clock.now_s + dt_s
        await self._advance(new_now, dt_s)
        self.clock.step(dt_s)

    async def _run_ticker(self) -> None:
        while True:
            await self.clock.sleep(self.tick_s)
            now = self.clock.now_s
            dt = now - self._last_tick_s
            self._last_tick_s = now
            if dt > 0:
                await self._advance(now, dt)

    async def stop(self) -> None:
        if self._ticker is not None:
            self._ticker.cancel()
            try:
                await self._ticker
            except asyncio.CancelledError:
                pass
            self._ticker = None
        for unit in self._gateway_units:
            for writer in list(unit.writers):
                writer.close()
        for server in self._servers:
            server.close()
            await server.wait_closed()
        self._servers.clear()


async def start_virtual_plant(
    config: PlantConfig,
    clock: SimClock | None = None,
    use_config_ports: bool = False,
    bind_host: str = "127.0.0.1",
) -> VirtualPlant:
    """Start emulators for every controller; returns the running plant handle."""
    plant = VirtualPlant(config, clock=clock, use_config_ports=use_config_ports, bind_host=bind_host)
    return await plant.start()

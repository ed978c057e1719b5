"""A deployment: one plant's adapters wired to virtual or physical controllers.

Virtual mode starts the emulated plant first and points the adapters at its
ephemeral endpoints; physical mode trusts the endpoints in the plant
config. A stepped-clock deployment owns a pump task that advances sim time
while runs are active.
"""

from __future__ import annotations

import asyncio
import itertools
import logging
from dataclasses import dataclass, field

from ..adapters import Adapter, AdapterSpec, CommandEnvelope, EventBus, next_command_id, spawn_adapter
from ..adapters.events import RunEvent
from ..bpmn.engine import CommandDispatcher
from ..plantconfig.model import PlantConfig
from ..virtualplant import REALTIME_SCALED, STEPPED, SimClock, VirtualPlant, start_virtual_plant

log = logging.getLogger(__name__)

COMMAND_TIMEOUT_MARGIN_S = 5.0
COMMAND_TIMEOUT_FACTOR = 3.0
DEFAULT_STEP_DT_S = 0.25
PUMP_SETTLE_ROUNDS = 40


class DeploymentError(Exception):
    pass


@dataclass
class ClockSettings:
    mode: str = STEPPED
    scale: float = 1.0

    def build(self) -> SimClock:
        return SimClock(self.mode, self.scale)


class DeploymentDispatcher(CommandDispatcher):
    """Routes engine submissions to the adapter owning each capability."""

    def __init__(self, deployment: "Deployment"):
        self.deployment = deployment
        self._owners: dict[str, Adapter] = {}

    async def submit(self, capability_id: str, params: dict) -> tuple[str | None, str]:
        capability = self.deployment.config.capability(capability_id)
        if capability is None:
            return None, f"unknown capability {capability_id!r}"
        adapter = self.deployment.adapters.get(capability.controller_id)
        if adapter is None:
            return None, f"no adapter for controller {capability.controller_id!r}"
        timeout_s = capability.nominal_duration_s * COMMAND_TIMEOUT_FACTOR + COMMAND_TIMEOUT_MARGIN_S
        envelope = CommandEnvelope(
            command_id=next_command_id(self.deployment.deployment_id),
            capability_id=capability_id,
            params=dict(params),
            issued_at=self.deployment.clock.now_s,
            timeout_s=timeout_s,
        )
        accepted, reason = await adapter.submit(envelope)
        if not accepted:
            return None, reason
        self._owners[envelope.command_id] = adapter
        return envelope.command_id, ""

    async def wait_terminal(self, command_id: str) -> RunEvent:
        adapter = self._owners.get(command_id)
        if adapter is None:
            raise KeyError(f"unknown command {command_id}")
        return await adapter.wait_terminal(command_id)


@dataclass
class Deployment:
    deployment_id: str
    plant_id: str
    mode: str  # virtual | physical
    config: PlantConfig
    clock: SimClock
    bus: EventBus
    status: str = "configuring"
    plant: VirtualPlant | None = None
    adapters: dict[str, Adapter] = field(default_factory=dict)
    adapter_detail: dict[str, str] = field(default_factory=dict)
    wire_taps: dict[str, list] = field(default_factory=dict)
    dispatcher: DeploymentDispatcher | None = None
    step_dt_s: float = DEFAULT_STEP_DT_S
    _active_runs: int = 0
    _pump_task: asyncio.Task | None = None

    def to_dict(self) -> dict:
        return {
            "deployment_id": self.deployment_id,
            "plant_id": self.plant_id,
            "mode": self.mode,
            "status": self.status,
            "clock": {"mode": self.clock.mode, "scale": self.clock.scale, "now_s": self.clock.now_s},
            "endpoints": {cid: list(ep) for cid, ep in (self.plant.endpoints if self.plant else {}).items()},
            "adapters": {
                controller_id: {
                    "registered": adapter.registered,
                    "detail": self.adapter_detail.get(controller_id, ""),
                }
                for controller_id, adapter in self.adapters.items()
            },
        }

    async def start_run_pump(self) -> None:
        """Keep sim time moving while at least one run is active (stepped mode)."""
        self._active_runs += 1
        if self.clock.mode != STEPPED or self._pump_task is not None:
            return

        async def pump():
            while self._active_runs > 0:
                for _ in range(PUMP_SETTLE_ROUNDS):
                    await asyncio.sleep(0)
                if self._active_runs <= 0:
                    break
                if self.plant is not None:
                    await self.plant.step(self.step_dt_s)
                else:
                    self.clock.step(self.step_dt_s)

        self._pump_task = asyncio.create_task(pump())

    async def end_run_pump(self) -> None:
        self._active_runs -= 1
        if self._active_runs <= 0 and self._pump_task is not None:
            task, self._pump_task = self._pump_task, None
            try:
                await task
            except asyncio.CancelledError:
                pass

    async def stop(self) -> None:
        self.status = "stopped"
        self._active_runs = 0
        if self._pump_task is not None:
            self._pump_task.cancel()
            try:
                await self._pump_task
            except asyncio.CancelledError:
                pass
            self._pump_task = None
        for adapter in self.adapters.values():
            await adapter.stop()
        if self.plant is not None:
            await self.plant.stop()
            self.plant = None


_deployment_seq = itertools.count(1)


async def create_deployment(
    config: PlantConfig,
    mode: str,
    clock_settings: ClockSettings | None = None,
    bus: EventBus | None = None,
    poll_interval_ms: int = 250,
    connect_retries: int = 3,
    record_wire: bool = False,
    use_config_ports: bool = False,
    deployment_id: str | None = None,
) -> Deployment:
    """Start the plant (virtual mode) and one adapter per controller."""
    if mode not in ("virtual", "physical"):
        raise DeploymentError(f"unknown mode {mode!r}")
    settings = clock_settings or (
        ClockSettings(STEPPED) if mode == "virtual" else ClockSettings(REALTIME_SCALED, 1.0))
    if mode == "physical" and settings.mode == STEPPED:
        raise DeploymentError("physical deployments cannot run a stepped clock")
    clock = settings.build()
    deployment = Deployment(
        deployment_id=deployment_id or f"dep-{next(_deployment_seq)}",
        plant_id=config.plant_id,
        mode=mode,
        config=config,
        clock=clock,
        bus=bus or EventBus(),
    )

    if mode == "virtual":
        deployment.plant = await start_virtual_plant(config, clock, use_config_ports=use_config_ports)

    registration_failures = []
    for controller in config.controllers:
        if mode == "virtual":
            host, port = deployment.plant.endpoints[controller.controller_id]
        else:
            host, port = controller.host, controller.port
        tap: list | None = [] if record_wire else None
        spec = AdapterSpec(
            adapter_id=f"{deployment.deployment_id}-{controller.controller_id}",
            plant_id=config.plant_id,
            controller=controller,
            machines=config.controller_machines(controller.controller_id),
            capabilities=[c for c in config.capabilities
                          if c.controller_id == controller.controller_id],
            mode=mode,
            host=host,
            port=port,
            poll_interval_ms=poll_interval_ms,
            connect_retries=connect_retries,
        )
        adapter = await spawn_adapter(spec, deployment.bus, clock, wire_tap=tap)
        deployment.adapters[controller.controller_id] = adapter
        if tap is not None:
            deployment.wire_taps[controller.controller_id] = tap
        if not adapter.registered:
            registration_failures.append(controller.controller_id)
            deployment.adapter_detail[controller.controller_id] = "registration failed"

    deployment.dispatcher = DeploymentDispatcher(deployment)
    deployment.status = "degraded" if registration_failures else "ready"
    return deployment

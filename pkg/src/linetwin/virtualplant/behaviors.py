"""Discrete-event machine behaviors driving the emulated PLC tables.

Every machine runs the same three-phase handshake (trigger coil rising edge
-> busy, duration elapsed -> done latched, trigger cleared -> idle) plus
kind-specific side effects: warehouses keep a slot-occupancy register,
indexed lines expose the active station, punching machines raise an
item-present input while a part is clamped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..plantconfig.model import CapabilityDescriptor, ModbusInvocation
from .modbus_core import PlcState

PHASE_IDLE = "idle"
PHASE_BUSY = "busy"
PHASE_DONE = "done_latched"
PHASE_FAULTED = "faulted"

BEHAVIOR_KINDS = {"warehouse", "punching", "indexed_line", "generic"}

# Demo warehouses start with the first four slots filled.
INITIAL_OCCUPANCY = 0x000F
ITEM_PRESENT_OFFSET = 3


@dataclass
class CapabilityBinding:
    name: str
    invocation: ModbusInvocation
    nominal_duration_s: float
    last_trigger: int = 0


@dataclass
class MachineBehavior:
    machine_id: str
    behavior_kind: str
    base_address: int
    bindings: list[CapabilityBinding] = field(default_factory=list)
    phase: str = PHASE_IDLE
    active: CapabilityBinding | None = None
    remaining_s: float = 0.0
    latched_params: list[int] = field(default_factory=list)
    error_pulse: bool = False

    @property
    def bound_invocation(self) -> ModbusInvocation | None:
        if self.active is not None:
            return self.active.invocation
        return self.bindings[0].invocation if self.bindings else None

    def fault(self, plc: PlcState) -> None:
        self.phase = PHASE_FAULTED
        if self.bound_invocation and self.bound_invocation.error:
            plc.discrete_inputs[self.bound_invocation.error.address] = 1


def behavior_for(machine_id: str, behavior_kind: str, base_address: int,
                 capabilities: list[CapabilityDescriptor]) -> MachineBehavior:
    if behavior_kind not in BEHAVIOR_KINDS:
        behavior_kind = "generic"
    bindings = [
        CapabilityBinding(
            name=cap.name,
            invocation=cap.invocation,
            nominal_duration_s=cap.nominal_duration_s,
        )
        for cap in capabilities
        if isinstance(cap.invocation, ModbusInvocation)
    ]
    return MachineBehavior(
        machine_id=machine_id,
        behavior_kind=behavior_kind,
        base_address=base_address,
        bindings=bindings,
    )


def init_behavior_state(behavior: MachineBehavior, plc: PlcState) -> None:
    if behavior.behavior_kind == "warehouse":
        plc.input_registers[behavior.base_address] = INITIAL_OCCUPANCY


def step_behavior(behavior: MachineBehavior, plc: PlcState, dt_s: float) -> None:
    """Advance one behavior by dt_s seconds of simulated time.

    A capability triggered while idle completes after exactly
    ceil(nominal_duration_s / dt_s) steps: the triggering step already
    counts toward the duration.
    """
    if dt_s <= 0:
        raise ValueError("dt_s must be positive")

    rising: list[CapabilityBinding] = []
    for binding in behavior.bindings:
        level = plc.coils[binding.invocation.trigger.address]
        if level and not binding.last_trigger:
            rising.append(binding)
        binding.last_trigger = level

    if behavior.error_pulse and behavior.phase != PHASE_FAULTED:
        _set_error(behavior, plc, False)
        behavior.error_pulse = False

    if behavior.phase == PHASE_FAULTED:
        return

    if behavior.phase == PHASE_IDLE and rising:
        binding = rising.pop(0)
        behavior.active = binding
        behavior.phase = PHASE_BUSY
        behavior.remaining_s = binding.nominal_duration_s
        behavior.latched_params = [
            plc.holding_registers[reg.address] for reg in binding.invocation.param_registers
        ]
        plc.discrete_inputs[binding.invocation.busy.address] = 1
        plc.discrete_inputs[binding.invocation.done.address] = 0
        _on_start(behavior, plc)

    # Any extra trigger while a cycle is running is ignored with an error pulse.
    if rising and behavior.phase in (PHASE_BUSY, PHASE_DONE):
        _set_error(behavior, plc, True)
        behavior.error_pulse = True

    if behavior.phase == PHASE_BUSY and behavior.active is not None:
        behavior.remaining_s -= dt_s
        _on_progress(behavior, plc)
        if behavior.remaining_s <= 1e-9:
            behavior.remaining_s = 0.0
            invocation = behavior.active.invocation
            plc.discrete_inputs[invocation.busy.address] = 0
            plc.discrete_inputs[invocation.done.address] = 1
            behavior.phase = PHASE_DONE
            _on_complete(behavior, plc)

    elif behavior.phase == PHASE_DONE and behavior.active is not None:
        if not plc.coils[behavior.active.invocation.trigger.address]:
            plc.discrete_inputs[behavior.active.invocation.done.address] = 0
            behavior.phase = PHASE_IDLE
            _on_reset(behavior, plc)
            behavior.active = None
            behavior.latched_params = []


def _set_error(behavior: MachineBehavior, plc: PlcState, value: bool) -> None:
    invocation = behavior.bound_invocation
    if invocation is not None and invocation.error is not None:
        plc.discrete_inputs[invocation.error.address] = 1 if value else 0


def _on_start(behavior: MachineBehavior, plc: PlcState) -> None:
    base = behavior.base_address
    if behavior.behavior_kind == "punching":
        plc.discrete_inputs[base + ITEM_PRESENT_OFFSET] = 1
    elif behavior.behavior_kind == "indexed_line":
        plc.input_registers[base] = 1


def _on_progress(behavior: MachineBehavior, plc: PlcState) -> None:
    if behavior.behavior_kind == "indexed_line" and behavior.active is not None:
        # Second machining station takes over halfway through the cycle.
        if behavior.remaining_s <= behavior.active.nominal_duration_s / 2:
            plc.input_registers[behavior.base_address] = 2


def _on_complete(behavior: MachineBehavior, plc: PlcState) -> None:
    base = behavior.base_address
    if behavior.behavior_kind == "indexed_line":
        plc.input_registers[base] = 0
    elif behavior.behavior_kind == "warehouse" and behavior.active is not None:
        slot = behavior.latched_params[0] & 0xF if behavior.latched_params else 0
        name = behavior.active.name.lower()
        occupancy = plc.input_registers[base]
        if "load" in name:
            occupancy &= ~(1 << slot)
        elif "store" in name:
            occupancy |= 1 << slot
        plc.input_registers[base] = occupancy & 0xFFFF


def _on_reset(behavior: MachineBehavior, plc: PlcState) -> None:
    if behavior.behavior_kind == "punching":
        plc.discrete_inputs[behavior.base_address + ITEM_PRESENT_OFFSET] = 0

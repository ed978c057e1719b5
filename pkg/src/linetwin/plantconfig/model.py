"""The extracted plant inventory: machines, controllers, capabilities, zones.

This is the canonical configuration object the rest of the platform runs on.
Instances are built by the extractor or deserialized from `plantconfig/1`
JSON; `validate_config` is the single source of truth for the invariants.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

MACHINE_KINDS = {"warehouse", "processing_station", "conveyor", "robot", "sensor", "actuator", "other"}
CONTROLLER_KINDS = {"modbus_plc", "robot_gateway"}
SIGNAL_DIRECTIONS = {"input", "output"}
SIGNAL_DATA_KINDS = {"boolean", "integer"}
PARAM_DATA_KINDS = {"boolean", "integer", "text"}
MODBUS_TABLES = {"coil", "discrete_input", "holding_register", "input_register"}

# Register-map convention: every machine on a Modbus controller owns a
# contiguous block of this many addresses per table; see README for the
# block layout (trigger coils, param registers, busy/done/error inputs).
MACHINE_BLOCK_SIZE = 16
BUSY_OFFSET = 0
DONE_OFFSET = 1
ERROR_OFFSET = 2
SENSOR_OFFSET = 3
PARAM_OFFSET = 1


def slugify(name: str) -> str:
    """URL-safe slug: CamelCase and punctuation become hyphen-separated."""
    s = re.sub(r"(.)([A-Z][a-z]+)", r"\1-\2", name)
    s = re.sub(r"([a-z0-9])([A-Z])", r"\1-\2", s)
    s = re.sub(r"[^A-Za-z0-9]+", "-", s.lower())
    return s.strip("-") or "unnamed"


@dataclass(frozen=True)
class ProtocolAddress:
    table: str
    address: int

    def to_dict(self) -> dict:
        return {"table": self.table, "address": self.address}

    @classmethod
    def from_dict(cls, data: dict) -> "ProtocolAddress":
        return cls(table=data["table"], address=int(data["address"]))


@dataclass
class SignalDescriptor:
    signal_id: str
    name: str
    direction: str
    data_kind: str
    binding: ProtocolAddress

    def to_dict(self) -> dict:
        return {
            "signal_id": self.signal_id,
            "name": self.name,
            "direction": self.direction,
            "data_kind": self.data_kind,
            "binding": self.binding.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SignalDescriptor":
        return cls(
            signal_id=data["signal_id"],
            name=data["name"],
            direction=data["direction"],
            data_kind=data["data_kind"],
            binding=ProtocolAddress.from_dict(data["binding"]),
        )


@dataclass
class MachineDescriptor:
    machine_id: str
    name: str
    kind: str
    zone_id: str
    signals: list[SignalDescriptor] = field(default_factory=list)
    source_element_id: str = ""

    def to_dict(self) -> dict:
        return {
            "machine_id": self.machine_id,
            "name": self.name,
            "kind": self.kind,
            "zone_id": self.zone_id,
            "signals": [s.to_dict() for s in self.signals],
            "source_element_id": self.source_element_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MachineDescriptor":
        return cls(
            machine_id=data["machine_id"],
            name=data["name"],
            kind=data["kind"],
            zone_id=data["zone_id"],
            signals=[SignalDescriptor.from_dict(s) for s in data.get("signals", [])],
            source_element_id=data.get("source_element_id", ""),
        )


@dataclass
class ControllerDescriptor:
    controller_id: str
    name: str
    kind: str
    host: str
    port: int
    protocol_params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "controller_id": self.controller_id,
            "name": self.name,
            "kind": self.kind,
            "endpoint": {"host": self.host, "port": self.port},
            "protocol_params": dict(sorted(self.protocol_params.items())),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ControllerDescriptor":
        endpoint = data.get("endpoint", {})
        return cls(
            controller_id=data["controller_id"],
            name=data["name"],
            kind=data["kind"],
            host=endpoint.get("host", ""),
            port=int(endpoint.get("port", 0)),
            protocol_params=dict(data.get("protocol_params", {})),
        )


@dataclass
class ModbusInvocation:
    trigger: ProtocolAddress
    param_registers: list[ProtocolAddress]
    busy: ProtocolAddress
    done: ProtocolAddress
    error: ProtocolAddress | None = None

    protocol = "modbus"

    def to_dict(self) -> dict:
        out = {
            "protocol": "modbus",
            "trigger": self.trigger.to_dict(),
            "param_registers": [a.to_dict() for a in self.param_registers],
            "busy": self.busy.to_dict(),
            "done": self.done.to_dict(),
        }
        out["error"] = self.error.to_dict() if self.error else None
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ModbusInvocation":
        return cls(
            trigger=ProtocolAddress.from_dict(data["trigger"]),
            param_registers=[ProtocolAddress.from_dict(a) for a in data.get("param_registers", [])],
            busy=ProtocolAddress.from_dict(data["busy"]),
            done=ProtocolAddress.from_dict(data["done"]),
            error=ProtocolAddress.from_dict(data["error"]) if data.get("error") else None,
        )


@dataclass
class RobotInvocation:
    command: str
    param_names: list[str] = field(default_factory=list)

    protocol = "robot"

    def to_dict(self) -> dict:
        return {"protocol": "robot", "command": self.command, "param_names": list(self.param_names)}

    @classmethod
    def from_dict(cls, data: dict) -> "RobotInvocation":
        return cls(command=data["command"], param_names=list(data.get("param_names", [])))


def invocation_from_dict(data: dict):
    protocol = data.get("protocol")
    if protocol == "modbus":
        return ModbusInvocation.from_dict(data)
    if protocol == "robot":
        return RobotInvocation.from_dict(data)
    raise ValueError(f"unknown invocation protocol {protocol!r}")


@dataclass
class CapabilityParam:
    name: str
    data_kind: str
    range: tuple[int, int] | None = None

    def to_dict(self) -> dict:
        out: dict = {"name": self.name, "data_kind": self.data_kind}
        out["range"] = list(self.range) if self.range else None
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CapabilityParam":
        rng = data.get("range")
        return cls(
            name=data["name"],
            data_kind=data["data_kind"],
            range=(int(rng[0]), int(rng[1])) if rng else None,
        )


@dataclass
class CapabilityDescriptor:
    capability_id: str
    name: str
    controller_id: str
    machine_id: str
    invocation: ModbusInvocation | RobotInvocation
    params: list[CapabilityParam] = field(default_factory=list)
    nominal_duration_s: float = 5.0
    description: str = ""

    def to_dict(self) -> dict:
        return {
            "capability_id": self.capability_id,
            "name": self.name,
            "controller_id": self.controller_id,
            "machine_id": self.machine_id,
            "invocation": self.invocation.to_dict(),
            "params": [p.to_dict() for p in self.params],
            "nominal_duration_s": self.nominal_duration_s,
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CapabilityDescriptor":
        return cls(
            capability_id=data["capability_id"],
            name=data["name"],
            controller_id=data["controller_id"],
            machine_id=data["machine_id"],
            invocation=invocation_from_dict(data["invocation"]),
            params=[CapabilityParam.from_dict(p) for p in data.get("params", [])],
            nominal_duration_s=float(data.get("nominal_duration_s", 5.0)),
            description=data.get("description", ""),
        )


@dataclass
class ZoneDescriptor:
    zone_id: str
    name: str
    parent_zone_id: str | None = None
    machine_ids: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "zone_id": self.zone_id,
            "name": self.name,
            "parent_zone_id": self.parent_zone_id,
            "machine_ids": list(self.machine_ids),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ZoneDescriptor":
        return cls(
            zone_id=data["zone_id"],
            name=data["name"],
            parent_zone_id=data.get("parent_zone_id"),
            machine_ids=list(data.get("machine_ids", [])),
        )


@dataclass
class PlantConfig:
    plant_id: str
    plant_name: str
    machines: list[MachineDescriptor] = field(default_factory=list)
    controllers: list[ControllerDescriptor] = field(default_factory=list)
    capabilities: list[CapabilityDescriptor] = field(default_factory=list)
    zones: list[ZoneDescriptor] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def machine(self, machine_id: str) -> MachineDescriptor | None:
        return next((m for m in self.machines if m.machine_id == machine_id), None)

    def controller(self, controller_id: str) -> ControllerDescriptor | None:
        return next((c for c in self.controllers if c.controller_id == controller_id), None)

    def capability(self, capability_id: str) -> CapabilityDescriptor | None:
        return next((c for c in self.capabilities if c.capability_id == capability_id), None)

    def capability_by_name(self, name: str) -> list[CapabilityDescriptor]:
        lowered = name.lower()
        return [c for c in self.capabilities if c.name.lower() == lowered]

    def machine_capabilities(self, machine_id: str) -> list[CapabilityDescriptor]:
        return [c for c in self.capabilities if c.machine_id == machine_id]

    def controller_machines(self, controller_id: str) -> list[MachineDescriptor]:
        ids: list[str] = []
        for cap in self.capabilities:
            if cap.controller_id == controller_id and cap.machine_id not in ids:
                ids.append(cap.machine_id)
        return [m for m in self.machines if m.machine_id in ids]


def validate_config(config: PlantConfig) -> list[str]:
    """Field-path error messages for every invariant violation; empty if valid."""
    errors: list[str] = []
    seen: set[str] = set()

    def check_unique(path: str, value: str) -> None:
        if value in seen:
            errors.append(f"{path}: duplicate id {value!r}")
        seen.add(value)

    machine_ids = {m.machine_id for m in config.machines}
    controller_ids = {c.controller_id for c in config.controllers}
    zone_ids = {z.zone_id for z in config.zones}
    controllers_by_id = {c.controller_id: c for c in config.controllers}

    for i, machine in enumerate(config.machines):
        path = f"machines[{i}]"
        check_unique(f"{path}.machine_id", machine.machine_id)
        if machine.kind not in MACHINE_KINDS:
            errors.append(f"{path}.kind: unknown kind {machine.kind!r}")
        if machine.zone_id and machine.zone_id not in zone_ids:
            errors.append(f"{path}.zone_id: unknown zone {machine.zone_id!r}")
        signal_names: set[str] = set()
        for j, signal in enumerate(machine.signals):
            spath = f"{path}.signals[{j}]"
            if signal.name in signal_names:
                errors.append(f"{spath}.name: duplicate signal name {signal.name!r}")
            signal_names.add(signal.name)
            if signal.direction not in SIGNAL_DIRECTIONS:
                errors.append(f"{spath}.direction: invalid {signal.direction!r}")
            if signal.data_kind not in SIGNAL_DATA_KINDS:
                errors.append(f"{spath}.data_kind: invalid {signal.data_kind!r}")
            if signal.binding.table not in MODBUS_TABLES:
                errors.append(f"{spath}.binding.table: invalid {signal.binding.table!r}")
            if not 0 <= signal.binding.address <= 0xFFFF:
                errors.append(f"{spath}.binding.address: out of 16-bit range")

    for i, controller in enumerate(config.controllers):
        path = f"controllers[{i}]"
        check_unique(f"{path}.controller_id", controller.controller_id)
        if controller.kind not in CONTROLLER_KINDS:
            errors.append(f"{path}.kind: unknown kind {controller.kind!r}")
        if not 1 <= controller.port <= 65535:
            errors.append(f"{path}.endpoint.port: {controller.port} out of range 1-65535")
        if controller.kind == "modbus_plc":
            unit_id = controller.protocol_params.get("unit_id")
            if not isinstance(unit_id, int) or not 0 <= unit_id <= 255:
                errors.append(f"{path}.protocol_params.unit_id: must be an integer 0-255")
        if controller.kind == "robot_gateway":
            command_set = controller.protocol_params.get("command_set")
            if not isinstance(command_set, list) or not command_set:
                errors.append(f"{path}.protocol_params.command_set: must be a non-empty list")

    cap_names_per_machine: set[tuple[str, str]] = set()
    for i, cap in enumerate(config.capabilities):
        path = f"capabilities[{i}]"
        check_unique(f"{path}.capability_id", cap.capability_id)
        if cap.controller_id not in controller_ids:
            errors.append(f"{path}.controller_id: unknown")
        if cap.machine_id not in machine_ids:
            errors.append(f"{path}.machine_id: unknown")
        key = (cap.machine_id, cap.name.lower())
        if key in cap_names_per_machine:
            errors.append(f"{path}.name: duplicate capability name {cap.name!r} on machine")
        cap_names_per_machine.add(key)
        if cap.nominal_duration_s <= 0:
            errors.append(f"{path}.nominal_duration_s: must be positive")
        controller = controllers_by_id.get(cap.controller_id)
        if controller is not None:
            expected = "modbus" if controller.kind == "modbus_plc" else "robot"
            if cap.invocation.protocol != expected:
                errors.append(f"{path}.invocation: protocol {cap.invocation.protocol!r} "
                              f"does not match controller kind {controller.kind!r}")
        for j, param in enumerate(cap.params):
            if param.data_kind not in PARAM_DATA_KINDS:
                errors.append(f"{path}.params[{j}].data_kind: invalid {param.data_kind!r}")
        if isinstance(cap.invocation, ModbusInvocation):
            for label, addr in [("trigger", cap.invocation.trigger),
                                ("busy", cap.invocation.busy),
                                ("done", cap.invocation.done)] + \
                               [(f"param_registers[{j}]", a) for j, a in enumerate(cap.invocation.param_registers)]:
                if not 0 <= addr.address <= 0xFFFF:
                    errors.append(f"{path}.invocation.{label}.address: out of 16-bit range")

    for i, zone in enumerate(config.zones):
        path = f"zones[{i}]"
        check_unique(f"{path}.zone_id", zone.zone_id)
        if zone.parent_zone_id and zone.parent_zone_id not in zone_ids:
            errors.append(f"{path}.parent_zone_id: unknown zone {zone.parent_zone_id!r}")
        for machine_id in zone.machine_ids:
            if machine_id not in machine_ids:
                errors.append(f"{path}.machine_ids: unknown machine {machine_id!r}")

    return errors

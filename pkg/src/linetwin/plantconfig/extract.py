"""Turn a parsed CAEX document into a PlantConfig.

Machines, controllers, zones and capabilities are recognized through the
role mapping; capability-to-machine binding follows InternalLinks. Modbus
addresses come from explicit AML attributes (`Coil`, `Register`, `Input`)
when present and from the per-machine block convention otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..aml.model import CaexDocument, ExternalInterface, InternalElement
from ..aml.resolve import resolve_link_side
from .model import (
    BUSY_OFFSET,
    DONE_OFFSET,
    ERROR_OFFSET,
    MACHINE_BLOCK_SIZE,
    PARAM_OFFSET,
    SENSOR_OFFSET,
    CapabilityDescriptor,
    CapabilityParam,
    ControllerDescriptor,
    MachineDescriptor,
    ModbusInvocation,
    PlantConfig,
    ProtocolAddress,
    RobotInvocation,
    SignalDescriptor,
    ZoneDescriptor,
    slugify,
    validate_config,
)
from .rolemap import RoleMapping

DEFAULT_NOMINAL_DURATION_S = 5.0
DEFAULT_MODBUS_UNIT_ID = 1

_XS_KIND = {"xs:int": "integer", "xs:integer": "integer", "xs:boolean": "boolean"}


class ExtractionError(Exception):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass
class ExtractionResult:
    config: PlantConfig
    warnings: list[str] = field(default_factory=list)


@dataclass
class _Entry:
    element: InternalElement
    path: str
    ancestors: list[InternalElement]


def _walk(doc: CaexDocument):
    for hierarchy in doc.instance_hierarchies:
        stack = [(_e, f"{hierarchy.name}/{_e.name}", []) for _e in reversed(hierarchy.elements)]
        while stack:
            element, path, ancestors = stack.pop()
            yield _Entry(element, path, ancestors)
            for child in reversed(element.children):
                stack.append((child, f"{path}/{child.name}", ancestors + [element]))


def _unique_slug(name: str, taken: set[str]) -> str:
    base = slugify(name)
    slug, n = base, 2
    while slug in taken:
        slug = f"{base}-{n}"
        n += 1
    taken.add(slug)
    return slug


def _int_attr(element: InternalElement, name: str) -> int | None:
    value = element.attribute_value(name)
    if value is None:
        return None
    return int(value.strip())


def extract_plant_config(
    doc: CaexDocument,
    role_mapping: RoleMapping | None = None,
    plant_id: str | None = None,
) -> ExtractionResult:
    """Extract the plant inventory; raises ExtractionError on hard failures.

    Output ordering follows document order, so the same document and mapping
    always produce the same config.
    """
    mapping = role_mapping or RoleMapping.default()
    warnings: list[str] = []
    errors: list[str] = []

    entries = list(_walk(doc))
    classified: list[tuple[_Entry, str, str | None]] = []  # entry, target, kind
    for entry in entries:
        if not entry.element.role_requirements:
            continue
        matched = mapping.rule_for(entry.element.role_requirements)
        if matched is None:
            warnings.append(
                f"{entry.path}: unknown role(s) {entry.element.role_requirements}, element skipped"
            )
            continue
        _, rule = matched
        classified.append((entry, rule.target, rule.kind))

    by_element_id = {entry.element.id: (entry, target, kind) for entry, target, kind in classified}

    # Zones first: machines need their enclosing zone.
    zone_ids: set[str] = set()
    zones: list[ZoneDescriptor] = []
    zone_by_element: dict[str, ZoneDescriptor] = {}
    for entry, target, _kind in classified:
        if target != "zone":
            continue
        zone = ZoneDescriptor(zone_id=_unique_slug(entry.element.name, zone_ids), name=entry.element.name)
        zone_by_element[entry.element.id] = zone
        zones.append(zone)
    for entry, target, _kind in classified:
        if target != "zone":
            continue
        zone = zone_by_element[entry.element.id]
        for ancestor in reversed(entry.ancestors):
            parent = zone_by_element.get(ancestor.id)
            if parent is not None:
                zone.parent_zone_id = parent.zone_id
                break

    def nearest_zone(entry: _Entry) -> ZoneDescriptor | None:
        for ancestor in reversed(entry.ancestors):
            zone = zone_by_element.get(ancestor.id)
            if zone is not None:
                return zone
        return None

    # Machines.
    machine_ids: set[str] = set()
    machines: list[MachineDescriptor] = []
    machine_by_element: dict[str, MachineDescriptor] = {}
    behaviors: dict[str, str] = {}
    assets_3d: dict[str, str] = {}
    for entry, target, kind in classified:
        if target != "machine":
            continue
        zone = nearest_zone(entry)
        machine = MachineDescriptor(
            machine_id=_unique_slug(entry.element.name, machine_ids),
            name=entry.element.name,
            kind=kind or "other",
            zone_id=zone.zone_id if zone else "",
            source_element_id=entry.element.id,
        )
        machines.append(machine)
        machine_by_element[entry.element.id] = machine
        if zone is not None:
            zone.machine_ids.append(machine.machine_id)
        behavior = entry.element.attribute_value("Behavior")
        if behavior:
            behaviors[machine.machine_id] = behavior.strip()
        asset = entry.element.attribute_value("Model3D")
        if asset:
            assets_3d[machine.machine_id] = asset.strip()

    # Controllers.
    controller_ids: set[str] = set()
    controllers: list[ControllerDescriptor] = []
    controller_by_element: dict[str, ControllerDescriptor] = {}
    for entry, target, kind in classified:
        if target != "controller":
            continue
        host = entry.element.attribute_value("Host")
        port = None
        try:
            port = _int_attr(entry.element, "Port")
        except ValueError:
            errors.append(f"{entry.path}: Port attribute is not an integer")
        if not host or port is None:
            errors.append(f"{entry.path}: controller is missing Host/Port endpoint attributes")
            continue
        protocol_params: dict = {}
        if kind == "modbus_plc":
            try:
                unit_id = _int_attr(entry.element, "UnitId")
            except ValueError:
                errors.append(f"{entry.path}: UnitId attribute is not an integer")
                unit_id = None
            protocol_params["unit_id"] = DEFAULT_MODBUS_UNIT_ID if unit_id is None else unit_id
        elif kind == "robot_gateway":
            command_set = entry.element.attribute_value("CommandSet") or ""
            protocol_params["command_set"] = [c.strip() for c in command_set.split(",") if c.strip()]
            home = entry.element.attribute_value("HomePosition")
            if home:
                protocol_params["home_position"] = home.strip()
        controller = ControllerDescriptor(
            controller_id=_unique_slug(entry.element.name, controller_ids),
            name=entry.element.name,
            kind=kind or "modbus_plc",
            host=host.strip(),
            port=port,
            protocol_params=protocol_params,
        )
        controllers.append(controller)
        controller_by_element[entry.element.id] = controller

    # Modbus block allocation: machines bound to a controller get consecutive
    # 16-address blocks in document order of the machines.
    machine_base: dict[tuple[str, str], int] = {}

    def block_base(controller: ControllerDescriptor, machine: MachineDescriptor) -> int:
        key = (controller.controller_id, machine.machine_id)
        if key not in machine_base:
            next_index = sum(1 for k in machine_base if k[0] == controller.controller_id)
            machine_base[key] = next_index * MACHINE_BLOCK_SIZE
        return machine_base[key]

    # Capabilities: ControlFunction elements under a controller, bound to a
    # machine through an InternalLink on one of their interfaces.
    links = list(doc.iter_links())

    def linked_machine(entry: _Entry) -> MachineDescriptor | None:
        own_interface_ids = {i.id for i in entry.element.external_interfaces}
        for link in links:
            sides = []
            resolved_a = resolve_link_side(doc, link.side_a)
            resolved_b = resolve_link_side(doc, link.side_b)
            if resolved_a and resolved_a[1].id in own_interface_ids and resolved_b:
                sides.append(resolved_b[0])
            elif resolved_b and resolved_b[1].id in own_interface_ids and resolved_a:
                sides.append(resolved_a[0])
            for partner in sides:
                machine = machine_by_element.get(partner.id)
                if machine is not None:
                    return machine
        return None

    capability_ids: set[str] = set()
    capabilities: list[CapabilityDescriptor] = []
    caps_per_machine: dict[str, int] = {}
    for entry, target, _kind in classified:
        if target != "capability":
            continue
        controller = None
        for ancestor in reversed(entry.ancestors):
            controller = controller_by_element.get(ancestor.id)
            if controller is not None:
                break
        if controller is None:
            warnings.append(f"{entry.path}: control function outside any controller, skipped")
            continue
        machine = linked_machine(entry)
        if machine is None:
            errors.append(f"unbound function: {entry.element.name}")
            continue

        params = _extract_params(entry.element)
        try:
            nominal_raw = entry.element.attribute_value("NominalDuration")
            nominal = float(nominal_raw) if nominal_raw else DEFAULT_NOMINAL_DURATION_S
        except ValueError:
            errors.append(f"{entry.path}: NominalDuration is not a number")
            nominal = DEFAULT_NOMINAL_DURATION_S

        cap_index = caps_per_machine.get(machine.machine_id, 0)
        caps_per_machine[machine.machine_id] = cap_index + 1

        if controller.kind == "modbus_plc":
            base = block_base(controller, machine)
            try:
                trigger_addr = _int_attr(entry.element, "Coil")
                register_base = _int_attr(entry.element, "Register")
                input_base = _int_attr(entry.element, "Input")
            except ValueError:
                errors.append(f"{entry.path}: Coil/Register/Input attribute is not an integer")
                continue
            if trigger_addr is None:
                trigger_addr = base + cap_index
            if register_base is None:
                register_base = base + PARAM_OFFSET
            if input_base is None:
                input_base = base
            invocation = ModbusInvocation(
                trigger=ProtocolAddress("coil", trigger_addr),
                param_registers=[
                    ProtocolAddress("holding_register", register_base + i) for i in range(len(params))
                ],
                busy=ProtocolAddress("discrete_input", input_base + BUSY_OFFSET),
                done=ProtocolAddress("discrete_input", input_base + DONE_OFFSET),
                error=ProtocolAddress("discrete_input", input_base + ERROR_OFFSET),
            )
        else:
            command = entry.element.attribute_value("Command") or slugify(entry.element.name)
            invocation = RobotInvocation(command=command.strip(), param_names=[p.name for p in params])

        capability_id = f"{machine.machine_id}.{slugify(entry.element.name)}"
        if capability_id in capability_ids:
            errors.append(f"{entry.path}: duplicate capability id {capability_id}")
            continue
        capability_ids.add(capability_id)
        capabilities.append(CapabilityDescriptor(
            capability_id=capability_id,
            name=entry.element.name,
            controller_id=controller.controller_id,
            machine_id=machine.machine_id,
            invocation=invocation,
            params=params,
            nominal_duration_s=nominal,
            description=entry.element.attribute_value("Description") or "",
        ))

    # Signals: handshake bits for every modbus-bound machine, kind-specific
    # status registers, then any sensor interfaces declared on the machine.
    controllers_of_machine: dict[str, ControllerDescriptor] = {}
    for cap in capabilities:
        controllers_of_machine.setdefault(cap.machine_id, next(
            c for c in controllers if c.controller_id == cap.controller_id))
    for entry, target, _kind in classified:
        if target != "machine":
            continue
        machine = machine_by_element[entry.element.id]
        controller = controllers_of_machine.get(machine.machine_id)
        if controller is None:
            continue
        if controller.kind == "modbus_plc":
            base = machine_base[(controller.controller_id, machine.machine_id)]
            machine.signals.extend([
                _signal(machine, "busy", "input", "boolean", "discrete_input", base + BUSY_OFFSET),
                _signal(machine, "done", "input", "boolean", "discrete_input", base + DONE_OFFSET),
                _signal(machine, "error", "input", "boolean", "discrete_input", base + ERROR_OFFSET),
            ])
            if machine.kind == "warehouse":
                machine.signals.append(
                    _signal(machine, "occupancy", "input", "integer", "input_register", base))
            behavior = behaviors.get(machine.machine_id)
            if behavior == "indexed_line":
                machine.signals.append(
                    _signal(machine, "station", "input", "integer", "input_register", base))
            sensor_offset = SENSOR_OFFSET
            for interface in entry.element.external_interfaces:
                rule = mapping.signal_interfaces.get(interface.ref_base_class_path)
                if rule is None:
                    continue
                address = _interface_address(interface)
                if address is None:
                    address = base + sensor_offset
                    sensor_offset += 1
                table = _table_for(rule)
                machine.signals.append(_signal(
                    machine, interface.name, rule.direction, rule.data_kind, table, address))
        else:
            # Gateway-controlled machines report their state through status
            # polls; busy is synthesized by the adapter, not addressable.
            pass

    if errors:
        raise ExtractionError(errors)

    plant_name = doc.instance_hierarchies[0].name if doc.instance_hierarchies else (doc.file_name or "plant")
    metadata: dict = {}
    if assets_3d:
        metadata["assets_3d"] = dict(sorted(assets_3d.items()))
    if behaviors:
        metadata["behaviors"] = dict(sorted(behaviors.items()))

    config = PlantConfig(
        plant_id=plant_id or slugify(plant_name),
        plant_name=plant_name,
        machines=machines,
        controllers=controllers,
        capabilities=capabilities,
        zones=zones,
        metadata=metadata,
    )
    invariant_errors = validate_config(config)
    if invariant_errors:
        raise ExtractionError(invariant_errors)
    return ExtractionResult(config=config, warnings=warnings)


def _signal(machine: MachineDescriptor, name: str, direction: str, data_kind: str,
            table: str, address: int) -> SignalDescriptor:
    return SignalDescriptor(
        signal_id=f"{machine.machine_id}.{slugify(name)}",
        name=slugify(name),
        direction=direction,
        data_kind=data_kind,
        binding=ProtocolAddress(table, address),
    )


def _table_for(rule) -> str:
    if rule.data_kind == "boolean":
        return "discrete_input" if rule.direction == "input" else "coil"
    return "input_register" if rule.direction == "input" else "holding_register"


def _interface_address(interface: ExternalInterface) -> int | None:
    for attr_name in ("Input", "Coil", "Register"):
        for attr in interface.attributes:
            if attr.name.lower() == attr_name.lower() and attr.value:
                return int(attr.value.strip())
    return None


def _extract_params(element: InternalElement) -> list[CapabilityParam]:
    container = element.attribute("Parameters")
    if container is None:
        return []
    params = []
    for child in container.children:
        data_kind = _XS_KIND.get((child.data_type or "").lower(), "text")
        rng = None
        min_attr, max_attr = child.find("Min"), child.find("Max")
        if min_attr is not None and max_attr is not None and min_attr.value and max_attr.value:
            rng = (int(min_attr.value), int(max_attr.value))
        params.append(CapabilityParam(name=child.name, data_kind=data_kind, range=rng))
    return params

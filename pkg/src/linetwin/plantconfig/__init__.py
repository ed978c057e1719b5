from .diff import ChangeSet, SectionDiff, diff_configs
from .extract import DEFAULT_NOMINAL_DURATION_S, ExtractionError, ExtractionResult, extract_plant_config
from .model import (
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
from .rolemap import RoleMapping, RoleRule, SignalInterfaceRule
from .serialize import ConfigError, config_from_dict, config_to_dict, deserialize_config, serialize_config

__all__ = [
    "CapabilityDescriptor",
    "CapabilityParam",
    "ChangeSet",
    "ConfigError",
    "ControllerDescriptor",
    "DEFAULT_NOMINAL_DURATION_S",
    "ExtractionError",
    "ExtractionResult",
    "MachineDescriptor",
    "ModbusInvocation",
    "PlantConfig",
    "ProtocolAddress",
    "RobotInvocation",
    "RoleMapping",
    "RoleRule",
    "SectionDiff",
    "SignalDescriptor",
    "SignalInterfaceRule",
    "ZoneDescriptor",
    "config_from_dict",
    "config_to_dict",
    "deserialize_config",
    "diff_configs",
    "extract_plant_config",
    "serialize_config",
    "slugify",
    "validate_config",
]

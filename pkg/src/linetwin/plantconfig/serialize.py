"""plantconfig/1 JSON serialization with stable key order."""

from __future__ import annotations

import json

from .model import PlantConfig, validate_config

SCHEMA = "plantconfig/1"


class ConfigError(Exception):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def config_to_dict(config: PlantConfig) -> dict:
    return {
        "schema": SCHEMA,
        "plant_id": config.plant_id,
        "plant_name": config.plant_name,
        "machines": [m.to_dict() for m in config.machines],
        "controllers": [c.to_dict() for c in config.controllers],
        "capabilities": [c.to_dict() for c in config.capabilities],
        "zones": [z.to_dict() for z in config.zones],
        "metadata": _sorted_deep(config.metadata),
    }


def _sorted_deep(value):
    if isinstance(value, dict):
        return {k: _sorted_deep(value[k]) for k in sorted(value)}
    if isinstance(value, list):
        return [_sorted_deep(v) for v in value]
    return value


def serialize_config(config: PlantConfig) -> str:
    errors = validate_config(config)
    if errors:
        raise ConfigError(errors)
    return json.dumps(config_to_dict(config), indent=2, ensure_ascii=False) + "\n"


def config_from_dict(data: dict) -> PlantConfig:
    if not isinstance(data, dict):
        raise ConfigError(["document is not a JSON object"])
    schema = data.get("schema")
    if schema != SCHEMA:
        raise ConfigError([f"schema: unknown version {schema!r}, expected {SCHEMA!r}"])
    try:
        from .model import (
            CapabilityDescriptor,
            ControllerDescriptor,
            MachineDescriptor,
            ZoneDescriptor,
        )

        config = PlantConfig(
            plant_id=data["plant_id"],
            plant_name=data["plant_name"],
            machines=[MachineDescriptor.from_dict(m) for m in data.get("machines", [])],
            controllers=[ControllerDescriptor.from_dict(c) for c in data.get("controllers", [])],
            capabilities=[CapabilityDescriptor.from_dict(c) for c in data.get("capabilities", [])],
            zones=[ZoneDescriptor.from_dict(z) for z in data.get("zones", [])],
            metadata=dict(data.get("metadata", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError([f"malformed config: {exc}"]) from exc
    errors = validate_config(config)
    if errors:
        raise ConfigError(errors)
    return config


def deserialize_config(text: str | bytes) -> PlantConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"invalid JSON: {exc}"]) from exc
    return config_from_dict(data)

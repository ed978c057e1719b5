"""Shipped fixture data: the demo plant model and the default role mapping."""

from importlib import resources
from pathlib import Path


def fixture_path(name: str) -> Path:
    return Path(resources.files(__package__) / name)


def demo_plant_xml() -> str:
    return fixture_path("demo_plant.aml").read_text(encoding="utf-8")


def default_role_mapping_path() -> Path:
    return fixture_path("default_roles.json")

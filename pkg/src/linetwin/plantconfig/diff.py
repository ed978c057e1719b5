"""Structural diff between two plant configs, keyed by descriptor ids."""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import PlantConfig


@dataclass
class SectionDiff:
    added: list[str] = field(default_factory=list)
    removed: list[str] = field(default_factory=list)
    modified: list[str] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (self.added or self.removed or self.modified)

    def to_dict(self) -> dict:
        return {"added": self.added, "removed": self.removed, "modified": self.modified}


@dataclass
class ChangeSet:
    machines: SectionDiff = field(default_factory=SectionDiff)
    controllers: SectionDiff = field(default_factory=SectionDiff)
    capabilities: SectionDiff = field(default_factory=SectionDiff)

    def is_empty(self) -> bool:
        return self.machines.is_empty() and self.controllers.is_empty() and self.capabilities.is_empty()

    def to_dict(self) -> dict:
        return {
            "machines": self.machines.to_dict(),
            "controllers": self.controllers.to_dict(),
            "capabilities": self.capabilities.to_dict(),
        }


def _diff_section(old_items: dict[str, dict], new_items: dict[str, dict]) -> SectionDiff:
    section = SectionDiff()
    section.added = sorted(set(new_items) - set(old_items))
    section.removed = sorted(set(old_items) - set(new_items))
    section.modified = sorted(
        key for key in set(old_items) & set(new_items) if old_items[key] != new_items[key]
    )
    return section


def diff_configs(old: PlantConfig, new: PlantConfig) -> ChangeSet:
    return ChangeSet(
        machines=_diff_section(
            {m.machine_id: m.to_dict() for m in old.machines},
            {m.machine_id: m.to_dict() for m in new.machines},
        ),
        controllers=_diff_section(
            {c.controller_id: c.to_dict() for c in old.controllers},
            {c.controller_id: c.to_dict() for c in new.controllers},
        ),
        capabilities=_diff_section(
            {c.capability_id: c.to_dict() for c in old.capabilities},
            {c.capability_id: c.to_dict() for c in new.capabilities},
        ),
    )

"""Role mapping: CAEX role-class paths -> what the extractor makes of them.

The mapping is data, not code, so new plants only need a new table. The
shipped default covers the demo plant's role library.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

TARGETS = {"machine", "controller", "zone", "capability", "ignore"}


@dataclass(frozen=True)
class RoleRule:
    target: str
    kind: str | None = None


@dataclass(frozen=True)
class SignalInterfaceRule:
    direction: str
    data_kind: str


@dataclass
class RoleMapping:
    roles: dict[str, RoleRule] = field(default_factory=dict)
    signal_interfaces: dict[str, SignalInterfaceRule] = field(default_factory=dict)

    def rule_for(self, role_paths: list[str]) -> tuple[str, RoleRule] | None:
        """First role path with a mapping, in the element's declaration order."""
        for path in role_paths:
            rule = self.roles.get(path)
            if rule is not None:
                return path, rule
        return None

    @classmethod
    def from_dict(cls, data: dict) -> "RoleMapping":
        if data.get("schema", "rolemapping/1") != "rolemapping/1":
            raise ValueError(f"unsupported role mapping schema {data.get('schema')!r}")
        roles = {}
        for path, raw in data.get("roles", {}).items():
            target = raw.get("target")
            if target not in TARGETS:
                raise ValueError(f"role {path!r}: unknown target {target!r}")
            roles[path] = RoleRule(target=target, kind=raw.get("kind"))
        signal_interfaces = {
            path: SignalInterfaceRule(direction=raw["direction"], data_kind=raw["data_kind"])
            for path, raw in data.get("signal_interfaces", {}).items()
        }
        return cls(roles=roles, signal_interfaces=signal_interfaces)

    @classmethod
    def load(cls, path: str | Path) -> "RoleMapping":
        with open(path, encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))

    @classmethod
    def default(cls) -> "RoleMapping":
        from ..fixtures import default_role_mapping_path

        return cls.load(default_role_mapping_path())

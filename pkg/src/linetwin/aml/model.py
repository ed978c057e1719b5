"""Object model for parsed CAEX (AutomationML) documents.

Everything here is a plain immutable-by-convention dataclass tree: the parser
builds it once and the rest of the platform only reads it.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class AmlAttribute:
    name: str
    data_type: str | None = None
    value: str | None = None
    children: list["AmlAttribute"] = field(default_factory=list)

    def find(self, name: str) -> "AmlAttribute | None":
        """First child attribute with the given name, case-insensitive."""
        lowered = name.lower()
        for child in self.children:
            if child.name.lower() == lowered:
                return child
        return None


@dataclass
class ExternalInterface:
    id: str
    name: str
    ref_base_class_path: str
    attributes: list[AmlAttribute] = field(default_factory=list)


@dataclass
class InternalLink:
    name: str
    side_a: str
    side_b: str


@dataclass
class InternalElement:
    id: str
    name: str
    ref_base_system_unit_path: str | None = None
    role_requirements: list[str] = field(default_factory=list)
    attributes: list[AmlAttribute] = field(default_factory=list)
    external_interfaces: list[ExternalInterface] = field(default_factory=list)
    children: list["InternalElement"] = field(default_factory=list)
    internal_links: list[InternalLink] = field(default_factory=list)

    def attribute(self, name: str) -> AmlAttribute | None:
        lowered = name.lower()
        for attr in self.attributes:
            if attr.name.lower() == lowered:
                return attr
        return None

    def attribute_value(self, name: str) -> str | None:
        attr = self.attribute(name)
        return attr.value if attr is not None else None


@dataclass
class ClassNode:
    """A node in a RoleClassLib / SystemUnitClassLib / InterfaceClassLib tree."""

    name: str
    path: str
    ref_base_class_path: str | None = None
    attributes: list[AmlAttribute] = field(default_factory=list)
    children: list["ClassNode"] = field(default_factory=list)


@dataclass
class ClassLib:
    name: str
    classes: list[ClassNode] = field(default_factory=list)


@dataclass
class InstanceHierarchy:
    name: str
    elements: list[InternalElement] = field(default_factory=list)
    internal_links: list[InternalLink] = field(default_factory=list)


@dataclass
class CaexDocument:
    file_name: str
    instance_hierarchies: list[InstanceHierarchy] = field(default_factory=list)
    role_class_libs: list[ClassLib] = field(default_factory=list)
    system_unit_class_libs: list[ClassLib] = field(default_factory=list)
    interface_class_libs: list[ClassLib] = field(default_factory=list)

    def iter_elements(self):
        """Depth-first walk over every InternalElement in document order."""
        for hierarchy in self.instance_hierarchies:
            stack = list(reversed(hierarchy.elements))
            while stack:
                element = stack.pop()
                yield element
                stack.extend(reversed(element.children))

    def iter_links(self):
        """All InternalLinks: hierarchy-level ones first, then element-level."""
        for hierarchy in self.instance_hierarchies:
            yield from hierarchy.internal_links
        for element in self.iter_elements():
            yield from element.internal_links

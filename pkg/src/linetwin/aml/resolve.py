"""CAEX path resolution and document consistency checks."""

from __future__ import annotations

from ..report import ValidationReport
from .model import CaexDocument, ClassNode, ExternalInterface, InternalElement


def resolve_path(doc: CaexDocument, caex_path: str):
    """Resolve a CAEX path against class libraries and instance hierarchies.

    `Lib/Class/SubClass` lands on a ClassNode, `Hierarchy/Element/Child` on an
    InternalElement. Segment matching is exact; returns None when nothing
    matches (not-found is a value, not an error).
    """
    if not caex_path:
        return None
    segments = caex_path.split("/")
    head, rest = segments[0], segments[1:]

    for libs in (doc.role_class_libs, doc.system_unit_class_libs, doc.interface_class_libs):
        for lib in libs:
            if lib.name != head:
                continue
            node = _walk_classes(lib.classes, rest)
            if node is not None:
                return node

    for hierarchy in doc.instance_hierarchies:
        if hierarchy.name != head:
            continue
        element = _walk_elements(hierarchy.elements, rest)
        if element is not None:
            return element
    return None


def _walk_classes(nodes: list[ClassNode], segments: list[str]) -> ClassNode | None:
    current = None
    for segment in segments:
        match = next((n for n in nodes if n.name == segment), None)
        if match is None:
            return None
        current = match
        nodes = match.children
    return current


def _walk_elements(elements: list[InternalElement], segments: list[str]) -> InternalElement | None:
    current = None
    for segment in segments:
        match = next((e for e in elements if e.name == segment), None)
        if match is None:
            return None
        current = match
        elements = match.children
    return current


def element_index(doc: CaexDocument) -> dict[str, InternalElement]:
    """Element id -> InternalElement for the whole document."""
    return {element.id: element for element in doc.iter_elements()}


def interface_index(doc: CaexDocument) -> dict[str, tuple[InternalElement, ExternalInterface]]:
    """Interface id -> (owning element, interface)."""
    index: dict[str, tuple[InternalElement, ExternalInterface]] = {}
    for element in doc.iter_elements():
        for interface in element.external_interfaces:
            index[interface.id] = (element, interface)
    return index


def resolve_link_side(doc: CaexDocument, side: str):
    """Resolve one InternalLink partner reference to (element, interface).

    Accepts both `<element-id>:<interface-name>` and bare interface GUID
    forms. Returns None when the reference does not land on an
    ExternalInterface inside the document.
    """
    if ":" in side:
        element_ref, _, interface_name = side.rpartition(":")
        element = element_index(doc).get(element_ref)
        if element is None:
            # the prefix may be a hierarchy path instead of a GUID
            candidate = resolve_path(doc, element_ref)
            element = candidate if isinstance(candidate, InternalElement) else None
        if element is None:
            return None
        for interface in element.external_interfaces:
            if interface.name == interface_name:
                return element, interface
        return None
    return interface_index(doc).get(side)


def validate_structure(doc: CaexDocument) -> ValidationReport:
    """Report duplicate ids, unresolved references, and empty names.

    An empty report means the document is internally consistent. Class-path
    references that do not resolve are warnings (they may live in a separate
    AML library file); link endpoints must resolve inside the document.
    """
    report = ValidationReport()
    seen_ids: dict[str, str] = {}

    def visit(element: InternalElement, path: str) -> None:
        if not element.name:
            report.error(path, "element has an empty name")
        if element.id in seen_ids:
            report.error(path, f"duplicate ID {element.id!r}, also used by {seen_ids[element.id]}")
        else:
            seen_ids[element.id] = path

        names_seen: set[str] = set()
        for child in element.children:
            if child.name in names_seen:
                report.error(f"{path}/{child.name}", "duplicate name among siblings")
            names_seen.add(child.name)

        if element.ref_base_system_unit_path and resolve_path(doc, element.ref_base_system_unit_path) is None:
            report.warning(path, f"unresolved RefBaseSystemUnitPath {element.ref_base_system_unit_path!r}")
        for role in element.role_requirements:
            if resolve_path(doc, role) is None:
                report.warning(path, f"unresolved role reference {role!r}")
        for interface in element.external_interfaces:
            if resolve_path(doc, interface.ref_base_class_path) is None:
                report.warning(f"{path}:{interface.name}",
                               f"unresolved interface class {interface.ref_base_class_path!r}")

        for child in element.children:
            visit(child, f"{path}/{child.name}")

    for hierarchy in doc.instance_hierarchies:
        names_seen: set[str] = set()
        for element in hierarchy.elements:
            if element.name in names_seen:
                report.error(f"{hierarchy.name}/{element.name}", "duplicate name among siblings")
            names_seen.add(element.name)
            visit(element, f"{hierarchy.name}/{element.name}")

    for link in doc.iter_links():
        for label, side in (("side_a", link.side_a), ("side_b", link.side_b)):
            if resolve_link_side(doc, side) is None:
                report.error(f"InternalLink {link.name or '(unnamed)'}",
                             f"{label} {side!r} does not resolve to an interface")
    return report

"""CAEX XML parsing.

Supports the CAEX element subset used by plant models: instance hierarchies,
internal elements, class libraries, attributes, external interfaces, internal
links and role requirements. Both the CAEX 2.15 and 3.0 namespaces are
accepted by matching on local names. Anything else is skipped with a debug
note, never an error.
"""

from __future__ import annotations

import logging
import xml.etree.ElementTree as ET

from .model import (
    AmlAttribute,
    CaexDocument,
    ClassLib,
    ClassNode,
    ExternalInterface,
    InstanceHierarchy,
    InternalElement,
    InternalLink,
)

log = logging.getLogger(__name__)

MAX_DEPTH = 64
MAX_ATTRIBUTES_PER_ELEMENT = 10_000

_CLASS_LIB_KINDS = {
    "RoleClassLib": "RoleClass",
    "SystemUnitClassLib": "SystemUnitClass",
    "InterfaceClassLib": "InterfaceClass",
}


class CaexError(Exception):
    """Base class for everything parse_caex can raise."""


class CaexParseError(CaexError):
    """The input is not well-formed XML; message carries line/column."""


class CaexStructureError(CaexError):
    """Well-formed XML that violates a CAEX rule (missing name/id, duplicate id)."""


def _local(tag) -> str:
    if not isinstance(tag, str):
        return ""  # comments / processing instructions
    return tag.rpartition("}")[2]


def parse_caex(xml_text: str | bytes) -> CaexDocument:
    """Parse a CAEX document into the object model.

    Raises CaexParseError on malformed XML and CaexStructureError on CAEX
    rule violations; never hangs or crashes on arbitrary input.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line, column = getattr(exc, "position", (0, 0))
        raise CaexParseError(f"XML syntax error at line {line}, column {column}: {exc}") from exc
    except ValueError as exc:
        # e.g. str input with an encoding declaration
        raise CaexParseError(f"XML syntax error: {exc}") from exc

    if _local(root.tag) != "CAEXFile":
        raise CaexStructureError(f"root element is <{_local(root.tag)}>, expected <CAEXFile>")

    doc = CaexDocument(file_name=root.get("FileName", ""))
    for child in root:
        kind = _local(child.tag)
        if kind == "InstanceHierarchy":
            doc.instance_hierarchies.append(_parse_hierarchy(child))
        elif kind == "RoleClassLib":
            doc.role_class_libs.append(_parse_class_lib(child))
        elif kind == "SystemUnitClassLib":
            doc.system_unit_class_libs.append(_parse_class_lib(child))
        elif kind == "InterfaceClassLib":
            doc.interface_class_libs.append(_parse_class_lib(child))
        else:
            log.debug("skipping unsupported CAEX element <%s>", kind)

    _check_unique_ids(doc)
    return doc


def _parse_hierarchy(node: ET.Element) -> InstanceHierarchy:
    name = node.get("Name")
    if not name:
        raise CaexStructureError("InstanceHierarchy without a Name")
    hierarchy = InstanceHierarchy(name=name)
    for child in node:
        kind = _local(child.tag)
        if kind == "InternalElement":
            hierarchy.elements.append(_parse_internal_element(child, name, depth=1))
        elif kind == "InternalLink":
            hierarchy.internal_links.append(_parse_internal_link(child, name))
        else:
            log.debug("skipping <%s> under InstanceHierarchy %s", kind, name)
    return hierarchy


def _parse_internal_element(node: ET.Element, parent_path: str, depth: int) -> InternalElement:
    if depth > MAX_DEPTH:
        raise CaexStructureError(f"element nesting under {parent_path} exceeds depth cap {MAX_DEPTH}")
    name = node.get("Name")
    if not name:
        raise CaexStructureError(f"InternalElement under {parent_path} has no Name")
    element_id = node.get("ID")
    if not element_id:
        raise CaexStructureError(f"InternalElement {parent_path}/{name} has no ID")
    path = f"{parent_path}/{name}"
    element = InternalElement(
        id=element_id,
        name=name,
        ref_base_system_unit_path=node.get("RefBaseSystemUnitPath") or None,
    )
    for child in node:
        kind = _local(child.tag)
        if kind == "Attribute":
            element.attributes.append(_parse_attribute(child, path, depth=1))
            _check_attribute_budget(element.attributes, path)
        elif kind == "ExternalInterface":
            element.external_interfaces.append(_parse_external_interface(child, path))
        elif kind == "InternalElement":
            element.children.append(_parse_internal_element(child, path, depth + 1))
        elif kind == "InternalLink":
            element.internal_links.append(_parse_internal_link(child, path))
        elif kind == "RoleRequirements":
            ref = child.get("RefBaseRoleClassPath")
            if ref:
                element.role_requirements.append(ref)
        elif kind == "SupportedRoleClass":
            ref = child.get("RefRoleClassPath")
            if ref:
                element.role_requirements.append(ref)
        else:
            log.debug("skipping <%s> under %s", kind, path)
    return element


def _parse_attribute(node: ET.Element, owner_path: str, depth: int) -> AmlAttribute:
    if depth > MAX_DEPTH:
        raise CaexStructureError(f"attribute nesting under {owner_path} exceeds depth cap {MAX_DEPTH}")
    name = node.get("Name")
    if not name:
        raise CaexStructureError(f"Attribute under {owner_path} has no Name")
    attribute = AmlAttribute(name=name, data_type=node.get("AttributeDataType") or None)
    for child in node:
        kind = _local(child.tag)
        if kind == "Value":
            attribute.value = child.text if child.text is not None else ""
        elif kind == "Attribute":
            attribute.children.append(_parse_attribute(child, owner_path, depth + 1))
        else:
            log.debug("skipping <%s> in attribute %s of %s", kind, name, owner_path)
    return attribute


def _count_attributes(attrs: list[AmlAttribute]) -> int:
    total = 0
    stack = list(attrs)
    while stack:
        attr = stack.pop()
        total += 1
        stack.extend(attr.children)
    return total


def _check_attribute_budget(attrs: list[AmlAttribute], path: str) -> None:
    if _count_attributes(attrs) > MAX_ATTRIBUTES_PER_ELEMENT:
        raise CaexStructureError(
            f"{path} carries more than {MAX_ATTRIBUTES_PER_ELEMENT} attributes"
        )


def _parse_external_interface(node: ET.Element, owner_path: str) -> ExternalInterface:
    name = node.get("Name")
    if not name:
        raise CaexStructureError(f"ExternalInterface under {owner_path} has no Name")
    interface_id = node.get("ID")
    if not interface_id:
        raise CaexStructureError(f"ExternalInterface {owner_path}:{name} has no ID")
    ref = node.get("RefBaseClassPath")
    if not ref:
        raise CaexStructureError(f"ExternalInterface {owner_path}:{name} has no RefBaseClassPath")
    interface = ExternalInterface(id=interface_id, name=name, ref_base_class_path=ref)
    for child in node:
        if _local(child.tag) == "Attribute":
            interface.attributes.append(_parse_attribute(child, f"{owner_path}:{name}", depth=1))
    return interface


def _parse_internal_link(node: ET.Element, owner_path: str) -> InternalLink:
    side_a = node.get("RefPartnerSideA")
    side_b = node.get("RefPartnerSideB")
    if not side_a or not side_b:
        raise CaexStructureError(f"InternalLink under {owner_path} is missing a partner reference")
    return InternalLink(name=node.get("Name", ""), side_a=side_a, side_b=side_b)


def _parse_class_lib(node: ET.Element) -> ClassLib:
    name = node.get("Name")
    if not name:
        raise CaexStructureError(f"{_local(node.tag)} without a Name")
    child_kind = _CLASS_LIB_KINDS[_local(node.tag)]
    lib = ClassLib(name=name)
    for child in node:
        if _local(child.tag) == child_kind:
            lib.classes.append(_parse_class_node(child, name, child_kind, depth=1))
    return lib


def _parse_class_node(node: ET.Element, parent_path: str, kind: str, depth: int) -> ClassNode:
    if depth > MAX_DEPTH:
        raise CaexStructureError(f"class nesting under {parent_path} exceeds depth cap {MAX_DEPTH}")
    name = node.get("Name")
    if not name:
        raise CaexStructureError(f"{kind} under {parent_path} has no Name")
    path = f"{parent_path}/{name}"
    cls = ClassNode(name=name, path=path, ref_base_class_path=node.get("RefBaseClassPath") or None)
    for child in node:
        child_kind = _local(child.tag)
        if child_kind == kind:
            cls.children.append(_parse_class_node(child, path, kind, depth + 1))
        elif child_kind == "Attribute":
            cls.attributes.append(_parse_attribute(child, path, depth=1))
    return cls


def _check_unique_ids(doc: CaexDocument) -> None:
    seen: dict[str, str] = {}

    def visit(element: InternalElement, path: str) -> None:
        if element.id in seen:
            raise CaexStructureError(
                f"duplicate ID {element.id!r} on {path} (already used by {seen[element.id]})"
            )
        seen[element.id] = path
        for interface in element.external_interfaces:
            ipath = f"{path}:{interface.name}"
            if interface.id in seen:
                raise CaexStructureError(
                    f"duplicate ID {interface.id!r} on {ipath} (already used by {seen[interface.id]})"
                )
            seen[interface.id] = ipath
        for child in element.children:
            visit(child, f"{path}/{child.name}")

    for hierarchy in doc.instance_hierarchies:
        for element in hierarchy.elements:
            visit(element, f"{hierarchy.name}/{element.name}")

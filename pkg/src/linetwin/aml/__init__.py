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
from .parser import CaexError, CaexParseError, CaexStructureError, parse_caex
from .resolve import element_index, interface_index, resolve_link_side, resolve_path, validate_structure

__all__ = [
    "AmlAttribute",
    "CaexDocument",
    "CaexError",
    "CaexParseError",
    "CaexStructureError",
    "ClassLib",
    "ClassNode",
    "ExternalInterface",
    "InstanceHierarchy",
    "InternalElement",
    "InternalLink",
    "element_index",
    "interface_index",
    "parse_caex",
    "resolve_link_side",
    "resolve_path",
    "validate_structure",
]

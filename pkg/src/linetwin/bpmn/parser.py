"""BPMN 2.0 XML parsing for the executable subset.

Recognized: process, laneSet/lane, startEvent, endEvent, serviceTask, task,
exclusiveGateway, parallelGateway, sequenceFlow with conditionExpression,
property declarations, and extensionElements carrying inputParameter
bindings. Diagram interchange and foreign namespaces are always skipped;
unrecognized elements of the BPMN model namespace are errors in strict mode
and warnings otherwise.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .exprs import ExprError, Literal, VarRef, parse_expr
from .model import BpmnNode, BpmnProcess, Lane, SequenceFlow

BPMN_NS = "http://www.omg.org/spec/BPMN/20100524/MODEL"

_NODE_TAGS = {
    "startEvent": "start_event",
    "endEvent": "end_event",
    "serviceTask": "service_task",
    "task": "service_task",
    "exclusiveGateway": "exclusive_gateway",
    "parallelGateway": "parallel_gateway",
}
_HANDLED = set(_NODE_TAGS) | {"sequenceFlow", "laneSet", "property", "documentation", "extensionElements"}
_IGNORED_TOPLEVEL = {"collaboration", "participant", "message", "signal", "error", "category", "dataStore"}

_VAR_KINDS = {"integer": "integer", "boolean": "boolean", "text": "text", "string": "text"}


class BpmnParseError(Exception):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass
class ParsedBpmn:
    process: BpmnProcess
    warnings: list[str] = field(default_factory=list)


def _local(tag) -> str:
    if not isinstance(tag, str):
        return ""
    return tag.rpartition("}")[2]


def _ns(tag) -> str:
    if not isinstance(tag, str) or not tag.startswith("{"):
        return ""
    return tag[1:].partition("}")[0]


def _is_model_element(node: ET.Element) -> bool:
    ns = _ns(node.tag)
    return ns in ("", BPMN_NS)


def parse_bpmn(xml_text: str | bytes, strict: bool = True) -> BpmnProcess:
    """Parse BPMN XML; raises BpmnParseError on structural violations."""
    parsed = parse_bpmn_detailed(xml_text, strict=strict)
    return parsed.process


def parse_bpmn_detailed(xml_text: str | bytes, strict: bool = True) -> ParsedBpmn:
    errors: list[str] = []
    warnings: list[str] = []
    try:
        root = ET.fromstring(xml_text)
    except (ET.ParseError, ValueError) as exc:
        raise BpmnParseError([f"XML syntax error: {exc}"]) from exc

    if _local(root.tag) == "process":
        process_elements = [root]
    else:
        process_elements = [child for child in root.iter() if _local(child.tag) == "process"]
    if not process_elements:
        raise BpmnParseError(["no <process> element found"])
    if len(process_elements) > 1:
        message = f"{len(process_elements)} <process> elements; only one is supported"
        if strict:
            errors.append(message)
        else:
            warnings.append(message)
    process_el = process_elements[0]

    process = BpmnProcess(process_id=process_el.get("id") or "process")
    unknown: list[str] = []

    for child in process_el:
        tag = _local(child.tag)
        if not _is_model_element(child):
            continue
        if tag in _NODE_TAGS:
            node = _parse_node(child, tag, errors)
            process.nodes.append(node)
        elif tag == "sequenceFlow":
            process.flows.append(_parse_flow(child, errors))
        elif tag == "laneSet":
            for lane_el in child:
                if _local(lane_el.tag) != "lane":
                    continue
                lane = Lane(
                    lane_id=lane_el.get("id") or f"lane{len(process.lanes)}",
                    name=lane_el.get("name") or "",
                )
                for ref in lane_el:
                    if _local(ref.tag) == "flowNodeRef" and ref.text:
                        lane.node_ids.append(ref.text.strip())
                process.lanes.append(lane)
        elif tag == "property":
            name = child.get("name") or child.get("id")
            if name:
                kind = _VAR_KINDS.get((child.get("type") or "integer").lower(), "integer")
                process.variables[name] = kind
        elif tag in ("documentation", "extensionElements"):
            continue
        else:
            unknown.append(tag)

    if unknown:
        message = f"unsupported BPMN element(s): {', '.join(sorted(set(unknown)))}"
        if strict:
            errors.append(message)
        else:
            warnings.append(message)

    # Param expressions: bare identifiers that are not declared variables are
    # text literals (generated models routinely write to=punch unquoted).
    for node in process.nodes:
        for name, expr in list(node.param_exprs.items()):
            if isinstance(expr, VarRef) and expr.name not in process.variables:
                node.param_exprs[name] = Literal(expr.name)

    node_ids = {n.node_id for n in process.nodes}
    if len(node_ids) != len(process.nodes):
        errors.append("duplicate node ids")
    starts = process.start_events()
    if len(starts) != 1:
        errors.append(f"process must have exactly one start event, found {len(starts)}")
    if not process.end_events():
        errors.append("process has no end event")
    for flow in process.flows:
        for label, ref in (("source", flow.source), ("target", flow.target)):
            if ref not in node_ids:
                errors.append(f"flow {flow.flow_id}: {label} {ref!r} does not exist")
    for lane in process.lanes:
        lane.node_ids = [n for n in lane.node_ids if n in node_ids]

    if errors:
        raise BpmnParseError(errors)
    return ParsedBpmn(process=process, warnings=warnings)


def _parse_node(el: ET.Element, tag: str, errors: list[str]) -> BpmnNode:
    node = BpmnNode(
        node_id=el.get("id") or f"node-{id(el)}",
        kind=_NODE_TAGS[tag],
        name=el.get("name") or "",
    )
    if node.kind == "service_task":
        implementation = el.get("implementation")
        if implementation and implementation not in ("##WebService", "##unspecified"):
            node.capability_id = implementation
        for ext in el:
            if _local(ext.tag) != "extensionElements":
                continue
            for item in ext.iter():
                if _local(item.tag) != "inputParameter":
                    continue
                name = item.get("name")
                source = (item.text or "").strip()
                if not name or not source:
                    continue
                try:
                    node.param_exprs[name] = parse_expr(source)
                    node.param_sources[name] = source
                except ExprError as exc:
                    errors.append(f"task {node.node_id}: parameter {name}: {exc}")
    if node.kind == "exclusive_gateway":
        node.default_flow_id = el.get("default")
    return node


def _parse_flow(el: ET.Element, errors: list[str]) -> SequenceFlow:
    flow = SequenceFlow(
        flow_id=el.get("id") or f"flow-{id(el)}",
        source=el.get("sourceRef") or "",
        target=el.get("targetRef") or "",
    )
    for child in el:
        if _local(child.tag) == "conditionExpression":
            source = "".join(child.itertext()).strip()
            if source:
                flow.condition_source = source
                try:
                    flow.condition = parse_expr(source)
                except ExprError as exc:
                    errors.append(f"flow {flow.flow_id}: condition: {exc}")
    return flow

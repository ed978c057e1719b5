"""Process validation against a plant config, including binding resolution.

Service tasks bind through their `implementation` attribute or, failing
that, by case-insensitive name match against capability names with lane
names (mapped to machines) breaking ties. Resolved capability ids are
written back onto the nodes.
"""

from __future__ import annotations

from ..plantconfig.model import PlantConfig
from ..report import ValidationReport
from .exprs import BOOLEAN, ExprError, type_check
from .model import BpmnProcess


def validate_process(process: BpmnProcess, config: PlantConfig) -> ValidationReport:
    report = ValidationReport()

    for node in process.service_tasks():
        capability = None
        if node.capability_id:
            capability = config.capability(node.capability_id)
            if capability is None:
                report.error(node.node_id, f"unbound task: {node.name or node.node_id} "
                                           f"(no capability {node.capability_id!r})")
                continue
        else:
            candidates = config.capability_by_name(node.name)
            if len(candidates) > 1:
                lane = process.lane_of(node.node_id)
                if lane is not None:
                    lane_key = lane.name.lower()
                    narrowed = [
                        c for c in candidates
                        if lane_key in (c.machine_id.lower(),
                                        (config.machine(c.machine_id).name.lower()
                                         if config.machine(c.machine_id) else ""))
                    ]
                    if narrowed:
                        candidates = narrowed
            if not candidates:
                report.error(node.node_id, f"unbound task: {node.name or node.node_id}")
                continue
            if len(candidates) > 1:
                names = ", ".join(c.capability_id for c in candidates)
                report.error(node.node_id, f"ambiguous task {node.name!r}: matches {names}")
                continue
            capability = candidates[0]
            node.capability_id = capability.capability_id

        declared = {p.name: p for p in capability.params}
        for name, expr in node.param_exprs.items():
            param = declared.get(name)
            if param is None:
                report.error(node.node_id, f"parameter {name!r} is not declared by "
                                           f"{capability.capability_id}")
                continue
            try:
                kind = type_check(expr, process.variables)
            except ExprError as exc:
                report.error(node.node_id, f"parameter {name}: {exc}")
                continue
            if kind != param.data_kind:
                report.error(node.node_id, f"parameter {name}: expected {param.data_kind}, got {kind}")

    for flow in process.flows:
        source = process.node(flow.source)
        if flow.condition is not None:
            if source is None or source.kind != "exclusive_gateway":
                report.error(flow.flow_id, "condition on a flow not leaving an exclusive gateway")
                continue
            try:
                kind = type_check(flow.condition, process.variables)
            except ExprError as exc:
                report.error(flow.flow_id, f"condition: {exc}")
                continue
            if kind != BOOLEAN:
                report.error(flow.flow_id, f"condition must be boolean, got {kind}")

    for node in process.nodes:
        if node.kind == "exclusive_gateway":
            outgoing = process.outgoing(node.node_id)
            if not outgoing:
                report.error(node.node_id, "exclusive gateway has no outgoing flow")
            if node.default_flow_id and node.default_flow_id not in {f.flow_id for f in outgoing}:
                report.error(node.node_id,
                             f"default flow {node.default_flow_id!r} is not an outgoing flow")
            if len(outgoing) > 1:
                bare = [f.flow_id for f in outgoing
                        if f.condition is None and f.flow_id != node.default_flow_id]
                if bare:
                    report.warning(node.node_id,
                                   f"unconditioned non-default flow(s) {', '.join(bare)} "
                                   "are taken unconditionally when reached first")
        elif node.kind == "parallel_gateway":
            incoming, outgoing = process.incoming(node.node_id), process.outgoing(node.node_id)
            if not outgoing:
                report.error(node.node_id, "parallel gateway has no outgoing flow")
            if len(incoming) > 1 and len(outgoing) > 1:
                report.warning(node.node_id, "gateway both joins and forks; token semantics "
                                             "will join first, then fork")
        elif node.kind == "end_event":
            if process.outgoing(node.node_id):
                report.error(node.node_id, "end event has outgoing flows")

    _check_reachability(process, report)
    return report


def _check_reachability(process: BpmnProcess, report: ValidationReport) -> None:
    starts = process.start_events()
    ends = process.end_events()
    if not starts or not ends:
        return
    forward: dict[str, list[str]] = {}
    backward: dict[str, list[str]] = {}
    for flow in process.flows:
        forward.setdefault(flow.source, []).append(flow.target)
        backward.setdefault(flow.target, []).append(flow.source)

    def closure(seeds: list[str], edges: dict[str, list[str]]) -> set[str]:
        seen = set(seeds)
        stack = list(seeds)
        while stack:
            for neighbor in edges.get(stack.pop(), []):
                if neighbor not in seen:
                    seen.add(neighbor)
                    stack.append(neighbor)
        return seen

    from_start = closure([n.node_id for n in starts], forward)
    to_end = closure([n.node_id for n in ends], backward)
    for node in process.nodes:
        if node.node_id not in from_start:
            report.error(node.node_id, "node is not reachable from the start event")
        elif node.node_id not in to_end:
            report.error(node.node_id, "no path from node to any end event")

"""BPMN process object model and run logs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .exprs import Expr

NODE_KINDS = {"start_event", "end_event", "service_task", "exclusive_gateway", "parallel_gateway"}


@dataclass
class BpmnNode:
    node_id: str
    kind: str
    name: str = ""
    capability_id: str | None = None
    param_exprs: dict[str, Expr] = field(default_factory=dict)
    param_sources: dict[str, str] = field(default_factory=dict)
    default_flow_id: str | None = None


@dataclass
class SequenceFlow:
    flow_id: str
    source: str
    target: str
    condition: Expr | None = None
    condition_source: str | None = None


@dataclass
class Lane:
    lane_id: str
    name: str
    node_ids: list[str] = field(default_factory=list)


@dataclass
class BpmnProcess:
    process_id: str
    nodes: list[BpmnNode] = field(default_factory=list)
    flows: list[SequenceFlow] = field(default_factory=list)
    lanes: list[Lane] = field(default_factory=list)
    variables: dict[str, str] = field(default_factory=dict)

    def node(self, node_id: str) -> BpmnNode | None:
        return next((n for n in self.nodes if n.node_id == node_id), None)

    def outgoing(self, node_id: str) -> list[SequenceFlow]:
        return [f for f in self.flows if f.source == node_id]

    def incoming(self, node_id: str) -> list[SequenceFlow]:
        return [f for f in self.flows if f.target == node_id]

    def start_events(self) -> list[BpmnNode]:
        return [n for n in self.nodes if n.kind == "start_event"]

    def end_events(self) -> list[BpmnNode]:
        return [n for n in self.nodes if n.kind == "end_event"]

    def service_tasks(self) -> list[BpmnNode]:
        return [n for n in self.nodes if n.kind == "service_task"]

    def lane_of(self, node_id: str) -> Lane | None:
        return next((lane for lane in self.lanes if node_id in lane.node_ids), None)

    def to_dict(self) -> dict:
        return {
            "process_id": self.process_id,
            "nodes": [
                {
                    "node_id": n.node_id,
                    "kind": n.kind,
                    "name": n.name,
                    "capability_id": n.capability_id,
                    "params": dict(n.param_sources),
                    "default_flow_id": n.default_flow_id,
                }
                for n in self.nodes
            ],
            "flows": [
                {
                    "flow_id": f.flow_id,
                    "source": f.source,
                    "target": f.target,
                    "condition": f.condition_source,
                }
                for f in self.flows
            ],
            "lanes": [
                {"lane_id": lane.lane_id, "name": lane.name, "node_ids": list(lane.node_ids)}
                for lane in self.lanes
            ],
            "variables": dict(self.variables),
        }


@dataclass
class RunEntry:
    at: float
    node_id: str
    phase: str  # entered | dispatched | completed | failed
    detail: str = ""

    def to_dict(self) -> dict:
        return {"at": self.at, "node_id": self.node_id, "phase": self.phase, "detail": self.detail}


@dataclass
class RunLog:
    run_id: str
    process_id: str
    mode: str
    entries: list[RunEntry] = field(default_factory=list)
    outcome: str = ""  # completed | failed | aborted
    stats: dict = field(default_factory=dict)

    def dispatch_order(self) -> list[str]:
        return [e.detail for e in self.entries if e.phase == "dispatched"]

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "process_id": self.process_id,
            "mode": self.mode,
            "outcome": self.outcome,
            "stats": dict(self.stats),
            "entries": [e.to_dict() for e in self.entries],
        }

    def to_ndjson(self) -> str:
        header = {
            "run_id": self.run_id,
            "process_id": self.process_id,
            "mode": self.mode,
            "outcome": self.outcome,
            "stats": dict(self.stats),
        }
        lines = [json.dumps(header)]
        lines += [json.dumps(e.to_dict()) for e in self.entries]
        return "\n".join(lines) + "\n"

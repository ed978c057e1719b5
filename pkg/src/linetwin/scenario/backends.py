"""Pluggable text-generation backends for the scenario loop.

remote_http speaks a provider-agnostic chat-completion contract; replay
returns recorded responses; the offline template backend compiles a strict
`steps: [...]` goal into BPMN deterministically, which is what CI uses.
"""

from __future__ import annotations

import json
import os
import re
import xml.sax.saxutils as saxutils
from pathlib import Path

import httpx

from ..plantconfig.model import CapabilityDescriptor, PlantConfig

DEFAULT_TIMEOUT_S = 60.0


class TransportError(Exception):
    pass


class GenerationError(Exception):
    pass


class LlmBackend:
    kind = "abstract"

    async def complete(self, bundle, scenario_id: str) -> str:
        raise NotImplementedError


class RemoteHttpBackend(LlmBackend):
    kind = "remote_http"

    def __init__(self, endpoint: str, model: str, api_key_env: str = "LINETWIN_LLM_API_KEY",
                 timeout_s: float = DEFAULT_TIMEOUT_S):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s

    async def complete(self, bundle, scenario_id: str) -> str:
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {"model": self.model, "messages": bundle.messages()}
        try:
            async with httpx.AsyncClient(timeout=self.timeout_s) as client:
                response = await client.post(self.endpoint, json=payload, headers=headers)
        except httpx.HTTPError as exc:
            raise TransportError(f"request to {self.endpoint} failed: {exc}") from exc
        if response.status_code // 100 != 2:
            raise TransportError(f"{self.endpoint} returned {response.status_code}: "
                                 f"{response.text[:200]}")
        try:
            data = response.json()
            return data["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion response: {exc}") from exc


class ReplayFixtureBackend(LlmBackend):
    kind = "replay_fixture"

    def __init__(self, path: str | Path):
        with open(path, encoding="utf-8") as handle:
            self.responses: dict = json.load(handle)

    async def complete(self, bundle, scenario_id: str) -> str:
        for key in (f"{scenario_id}/{bundle.iteration}", str(bundle.iteration)):
            if key in self.responses:
                return self.responses[key]
        raise TransportError(
            f"no recorded response for scenario {scenario_id!r} iteration {bundle.iteration}")


_STEP_RE = re.compile(r"^\s*(?P<name>[A-Za-z_][A-Za-z0-9_\- ]*?)\s*(?:\((?P<args>[^)]*)\))?\s*$")


def parse_steps_goal(goal: str) -> list[tuple[str, dict]]:
    """Parse the strict `steps: [Name, Name(key=value), ...]` goal syntax."""
    text = goal.strip()
    if not text.lower().startswith("steps"):
        raise GenerationError("offline goals must use the steps: [...] syntax")
    text = text[len("steps"):].lstrip()
    if text.startswith(":"):
        text = text[1:].strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise GenerationError("steps goal must be a bracketed list")
    inner = text[1:-1].strip()
    if not inner:
        raise GenerationError("steps list is empty")
    steps = []
    for chunk in _split_steps(inner):
        match = _STEP_RE.match(chunk)
        if match is None:
            raise GenerationError(f"unparseable step {chunk!r}")
        params: dict = {}
        if match.group("args"):
            for pair in match.group("args").split(","):
                if not pair.strip():
                    continue
                if "=" not in pair:
                    raise GenerationError(f"step {match.group('name')}: malformed argument {pair!r}")
                key, _, raw = pair.partition("=")
                params[key.strip()] = _parse_value(raw.strip())
        steps.append((match.group("name").strip(), params))
    return steps


def _split_steps(inner: str) -> list[str]:
    chunks, depth, current = [], 0, ""
    for char in inner:
        if char == "(":
            depth += 1
        elif char == ")":
            depth -= 1
        if char == "," and depth == 0:
            chunks.append(current)
            current = ""
        else:
            current += char
    if current.strip():
        chunks.append(current)
    return [c.strip() for c in chunks if c.strip()]


def _parse_value(raw: str):
    lowered = raw.lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    if re.fullmatch(r"-?\d+", raw):
        return int(raw)
    return raw.strip("'\"")


class TemplateOfflineBackend(LlmBackend):
    """Compiles a steps goal into sequential BPMN; fully deterministic."""

    kind = "template_offline"

    def __init__(self, config: PlantConfig):
        self.config = config

    async def complete(self, bundle, scenario_id: str) -> str:
        steps = parse_steps_goal(bundle.goal_description)
        resolved: list[tuple[CapabilityDescriptor, dict]] = []
        for name, params in steps:
            candidates = self.config.capability_by_name(name)
            if not candidates:
                by_id = self.config.capability(name)
                candidates = [by_id] if by_id else []
            if not candidates:
                raise GenerationError(f"unknown step name: {name}")
            if len(candidates) > 1:
                ids = ", ".join(c.capability_id for c in candidates)
                raise GenerationError(f"ambiguous step name {name}: {ids}")
            resolved.append((candidates[0], params))
        return compile_sequential_bpmn(self.config, resolved, process_id=scenario_id or "generated")


def compile_sequential_bpmn(config: PlantConfig,
                            steps: list[tuple[CapabilityDescriptor, dict]],
                            process_id: str = "generated") -> str:
    """Sequential BPMN with machine lanes and explicit capability bindings."""
    used_machines: list[str] = []
    for capability, _ in steps:
        if capability.machine_id not in used_machines:
            used_machines.append(capability.machine_id)

    lanes_xml = ""
    if used_machines:
        lane_entries = []
        for machine_id in used_machines:
            machine = config.machine(machine_id)
            refs = "".join(
                f"\n        <bpmn:flowNodeRef>t{i + 1}</bpmn:flowNodeRef>"
                for i, (capability, _) in enumerate(steps)
                if capability.machine_id == machine_id
            )
            lane_entries.append(
                f'      <bpmn:lane id="lane_{machine_id}" name="{saxutils.escape(machine.name if machine else machine_id)}">'
                f"{refs}\n      </bpmn:lane>"
            )
        lanes_xml = '    <bpmn:laneSet id="lanes">\n' + "\n".join(lane_entries) + "\n    </bpmn:laneSet>\n"

    tasks_xml = []
    for i, (capability, params) in enumerate(steps):
        task_id = f"t{i + 1}"
        if params:
            inputs = "".join(
                f"\n        <inputParameter name=\"{saxutils.escape(str(k))}\">{saxutils.escape(_render_param(v))}</inputParameter>"
                for k, v in params.items()
            )
            body = f">\n      <bpmn:extensionElements>{inputs}\n      </bpmn:extensionElements>\n    </bpmn:serviceTask>"
        else:
            body = "/>"
        tasks_xml.append(
            f'    <bpmn:serviceTask id="{task_id}" name="{saxutils.escape(capability.name)}" '
            f'implementation="{saxutils.escape(capability.capability_id)}"{body}'
        )

    flows = ['    <bpmn:sequenceFlow id="f0" sourceRef="start" targetRef="t1"/>' if steps else
             '    <bpmn:sequenceFlow id="f0" sourceRef="start" targetRef="end"/>']
    for i in range(1, len(steps)):
        flows.append(f'    <bpmn:sequenceFlow id="f{i}" sourceRef="t{i}" targetRef="t{i + 1}"/>')
    if steps:
        flows.append(f'    <bpmn:sequenceFlow id="f{len(steps)}" sourceRef="t{len(steps)}" targetRef="end"/>')

    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        '<bpmn:definitions xmlns:bpmn="http://www.omg.org/spec/BPMN/20100524/MODEL" '
        f'id="defs_{process_id}">\n'
        f'  <bpmn:process id="{saxutils.escape(process_id)}">\n'
        f"{lanes_xml}"
        '    <bpmn:startEvent id="start"/>\n'
        + "\n".join(tasks_xml) + ("\n" if tasks_xml else "")
        + '    <bpmn:endEvent id="end"/>\n'
        + "\n".join(flows) + "\n"
        "  </bpmn:process>\n"
        "</bpmn:definitions>\n"
    )


def _render_param(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)

"""Prompt assembly for process generation.

Three parts shape every request: the rendered capability inventory, the
static BPMN-creation instruction, and the engineer's goal, plus the
corrective feedback (and the previous attempt) on iterations after the
first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..plantconfig.model import PlantConfig

BPMN_CREATION_PROMPT = """\
You write executable BPMN 2.0 process definitions for a production line.
Reply with a single BPMN XML document and nothing else: no prose, no
markdown fences. Requirements:
- one <process> with exactly one startEvent and at least one endEvent
- serviceTask elements only, one per production step, wired with
  sequenceFlow elements; exclusiveGateway/parallelGateway where branching
  is needed
- each serviceTask name must exactly match a capability name from the
  inventory; set the task's implementation attribute to the capability id
- pass parameters through extensionElements:
  <extensionElements><inputParameter name="...">value</inputParameter></extensionElements>
- group tasks into lanes named after the machines that execute them
"""


@dataclass
class PromptBundle:
    capabilities_context: str
    bpmn_creation_prompt: str
    goal_description: str
    corrective_prompt: str | None = None
    iteration: int = 1
    previous_bpmn_xml: str | None = None
    previous_errors: list[str] = field(default_factory=list)

    def render(self) -> str:
        sections = [
            "## Plant capabilities\n" + self.capabilities_context,
            "## Instructions\n" + self.bpmn_creation_prompt,
            f"## Goal (iteration {self.iteration})\n" + self.goal_description,
        ]
        if self.previous_errors or self.previous_bpmn_xml:
            feedback = ""
            if self.previous_errors:
                feedback += "Validation errors from the previous attempt:\n"
                feedback += "\n".join(f"- {message}" for message in self.previous_errors) + "\n"
            if self.previous_bpmn_xml:
                feedback += "Previous BPMN:\n" + self.previous_bpmn_xml
            sections.append("## Previous attempt\n" + feedback)
        if self.corrective_prompt:
            sections.append("## Corrective prompt\n" + self.corrective_prompt)
        return "\n\n".join(sections)

    def messages(self) -> list[dict]:
        """Chat-completion style message list for remote backends."""
        return [
            {"role": "system", "content": self.bpmn_creation_prompt},
            {"role": "user", "content": self.render()},
        ]

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "goal_description": self.goal_description,
            "corrective_prompt": self.corrective_prompt,
            "previous_errors": list(self.previous_errors),
            "rendered": self.render(),
        }


def render_capabilities_context(config: PlantConfig) -> str:
    """Deterministic machine/capability inventory, in config order."""
    lines = [f"Plant: {config.plant_name} (id {config.plant_id})"]
    for machine in config.machines:
        lines.append(f"- machine {machine.name} (id {machine.machine_id}, kind {machine.kind}"
                     + (f", zone {machine.zone_id})" if machine.zone_id else ")"))
        for capability in config.machine_capabilities(machine.machine_id):
            params = ", ".join(
                p.name + ": " + p.data_kind + (f" {p.range[0]}..{p.range[1]}" if p.range else "")
                for p in capability.params
            )
            lines.append(
                f"  - {capability.name}({params}) "
                f"[id {capability.capability_id}] ~{capability.nominal_duration_s:g}s"
            )
    return "\n".join(lines)


def assemble_prompt(
    config: PlantConfig,
    goal: str,
    corrective: str | None = None,
    iteration: int = 1,
    previous_bpmn_xml: str | None = None,
    previous_errors: list[str] | None = None,
) -> PromptBundle:
    if not goal.strip():
        raise ValueError("goal must be non-empty")
    return PromptBundle(
        capabilities_context=render_capabilities_context(config),
        bpmn_creation_prompt=BPMN_CREATION_PROMPT,
        goal_description=goal,
        corrective_prompt=corrective,
        iteration=iteration,
        previous_bpmn_xml=previous_bpmn_xml,
        previous_errors=list(previous_errors or []),
    )

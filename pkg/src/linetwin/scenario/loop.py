"""The supervised generation loop: generate, validate, simulate, review.

Phase machine: drafting -> (generate) -> validated -> (simulate) ->
awaiting_review -> accept | corrective back to drafting. Validation
failures feed the next prompt automatically, up to a bounded number of
machine-driven retries per generate action; the history records every
attempt verbatim.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from ..bpmn import BpmnParseError, parse_bpmn, validate_process
from ..bpmn.model import BpmnProcess, RunLog
from ..plantconfig.model import PlantConfig
from .backends import GenerationError, LlmBackend, TransportError
from .extract import BpmnExtractionError, extract_bpmn_xml
from .prompts import assemble_prompt

log = logging.getLogger(__name__)

PHASES = {"drafting", "generated", "validated", "simulating", "awaiting_review", "accepted", "rejected"}
TERMINAL_PHASES = {"accepted", "rejected"}

# One human-free corrective regeneration per validation failure, bounded.
AUTO_CORRECTIVE_CAP = 3

LEGAL_ACTIONS = {
    "drafting": {"generate", "corrective", "reject"},
    "validated": {"simulate", "corrective", "reject"},
    "awaiting_review": {"accept", "corrective", "simulate", "reject"},
    "accepted": set(),
    "rejected": set(),
}


class LoopActionError(Exception):
    pass


@dataclass
class HistoryEntry:
    iteration: int
    action: str
    prompt: dict | None = None
    raw_response: str | None = None
    bpmn_xml: str | None = None
    validation_messages: list[str] = field(default_factory=list)
    run_log: dict | None = None
    supervisor_note: str | None = None

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "action": self.action,
            "prompt": self.prompt,
            "raw_response": self.raw_response,
            "bpmn_xml": self.bpmn_xml,
            "validation_messages": list(self.validation_messages),
            "run_log": self.run_log,
            "supervisor_note": self.supervisor_note,
        }


@dataclass
class ScenarioLoopState:
    scenario_id: str
    plant_id: str
    goal: str
    phase: str = "drafting"
    iteration: int = 0
    corrective: str | None = None
    current_bpmn_xml: str | None = None
    last_validation_errors: list[str] = field(default_factory=list)
    last_run_outcome: str | None = None
    history: list[HistoryEntry] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "plant_id": self.plant_id,
            "goal": self.goal,
            "phase": self.phase,
            "iteration": self.iteration,
            "corrective": self.corrective,
            "current_bpmn_xml": self.current_bpmn_xml,
            "last_validation_errors": list(self.last_validation_errors),
            "last_run_outcome": self.last_run_outcome,
            "history": [entry.to_dict() for entry in self.history],
        }


@dataclass
class LoopContext:
    config: PlantConfig
    backend: LlmBackend
    simulator: object  # async callable (BpmnProcess, bpmn_xml) -> RunLog


def _check_action(state: ScenarioLoopState, action: str) -> None:
    legal = LEGAL_ACTIONS.get(state.phase, set())
    if action not in legal:
        raise LoopActionError(
            f"action {action!r} is not legal in phase {state.phase!r}; "
            f"legal actions: {sorted(legal) or 'none (terminal phase)'}")


async def advance_loop(state: ScenarioLoopState, action: str, context: LoopContext,
                       note: str | None = None) -> ScenarioLoopState:
    """Apply one loop action; mutates and returns the state."""
    _check_action(state, action)

    if action == "generate":
        await _generate(state, context)
    elif action == "simulate":
        await _simulate(state, context)
    elif action == "corrective":
        if not note or not note.strip():
            raise LoopActionError("corrective action requires a non-empty note")
        state.corrective = note
        state.phase = "drafting"
        state.history.append(HistoryEntry(
            iteration=state.iteration, action="corrective", supervisor_note=note))
    elif action == "accept":
        if state.last_run_outcome != "completed":
            raise LoopActionError(
                "accept requires a completed simulation run "
                f"(latest outcome: {state.last_run_outcome or 'none'})")
        state.phase = "accepted"
        state.history.append(HistoryEntry(iteration=state.iteration, action="accept"))
    elif action == "reject":
        state.phase = "rejected"
        state.history.append(HistoryEntry(
            iteration=state.iteration, action="reject", supervisor_note=note))
    else:
        raise LoopActionError(f"unknown action {action!r}")
    return state


async def _generate(state: ScenarioLoopState, context: LoopContext) -> None:
    corrective = state.corrective
    for attempt in range(1 + AUTO_CORRECTIVE_CAP):
        state.iteration += 1
        bundle = assemble_prompt(
            context.config,
            state.goal,
            corrective=corrective,
            iteration=state.iteration,
            previous_bpmn_xml=state.current_bpmn_xml if state.last_validation_errors else None,
            previous_errors=state.last_validation_errors,
        )
        entry = HistoryEntry(iteration=state.iteration, action="generate", prompt=bundle.to_dict())
        state.history.append(entry)
        state.phase = "generated"

        try:
            raw = await context.backend.complete(bundle, state.scenario_id)
        except (TransportError, GenerationError) as exc:
            state.phase = "drafting"
            entry.validation_messages = [f"generation failed: {exc}"]
            raise
        entry.raw_response = raw

        errors: list[str] = []
        xml: str | None = None
        try:
            xml = extract_bpmn_xml(raw)
            entry.bpmn_xml = xml
            process = parse_bpmn(xml, strict=True)
            report = validate_process(process, context.config)
            errors = [str(f) for f in report.errors]
        except BpmnExtractionError as exc:
            errors = [f"extraction: {exc}"]
        except BpmnParseError as exc:
            errors = [f"parse: {message}" for message in exc.errors]
        entry.validation_messages = errors

        if not errors:
            state.current_bpmn_xml = xml
            state.last_validation_errors = []
            state.last_run_outcome = None  # prior runs covered the old BPMN
            state.phase = "validated"
            state.corrective = None
            return

        # Feed the failure back and retry without the supervisor.
        state.current_bpmn_xml = xml
        state.last_validation_errors = errors
        corrective = ("The previous BPMN failed validation; fix every listed "
                      "error and return the corrected document.")
        log.info("scenario %s: validation failed on iteration %d (%d errors)",
                 state.scenario_id, state.iteration, len(errors))
    state.phase = "drafting"


async def _simulate(state: ScenarioLoopState, context: LoopContext) -> None:
    assert state.current_bpmn_xml is not None
    process: BpmnProcess = parse_bpmn(state.current_bpmn_xml, strict=True)
    report = validate_process(process, context.config)
    if report.has_errors():
        raise LoopActionError(f"stored BPMN no longer validates: {report.messages()}")
    state.phase = "simulating"
    run_log: RunLog = await context.simulator(process, state.current_bpmn_xml)
    state.last_run_outcome = run_log.outcome
    state.history.append(HistoryEntry(
        iteration=state.iteration, action="simulate", run_log=run_log.to_dict()))
    state.phase = "awaiting_review"

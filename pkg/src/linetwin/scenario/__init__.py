from .backends import (
    GenerationError,
    LlmBackend,
    RemoteHttpBackend,
    ReplayFixtureBackend,
    TemplateOfflineBackend,
    TransportError,
    compile_sequential_bpmn,
    parse_steps_goal,
)
from .extract import BpmnExtractionError, extract_bpmn_xml
from .loop import (
    AUTO_CORRECTIVE_CAP,
    HistoryEntry,
    LEGAL_ACTIONS,
    LoopActionError,
    LoopContext,
    ScenarioLoopState,
    advance_loop,
)
from .prompts import BPMN_CREATION_PROMPT, PromptBundle, assemble_prompt, render_capabilities_context

__all__ = [
    "AUTO_CORRECTIVE_CAP",
    "BPMN_CREATION_PROMPT",
    "BpmnExtractionError",
    "GenerationError",
    "HistoryEntry",
    "LEGAL_ACTIONS",
    "LlmBackend",
    "LoopActionError",
    "LoopContext",
    "PromptBundle",
    "RemoteHttpBackend",
    "ReplayFixtureBackend",
    "ScenarioLoopState",
    "TemplateOfflineBackend",
    "TransportError",
    "advance_loop",
    "assemble_prompt",
    "compile_sequential_bpmn",
    "extract_bpmn_xml",
    "parse_steps_goal",
    "render_capabilities_context",
]

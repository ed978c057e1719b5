"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class ErrorDetail(BaseModel):
    code: str
    message: str
    detail: str = ""


class ErrorBody(BaseModel):
    error: ErrorDetail


class IngestResponse(BaseModel):
    plant_id: str
    config_doc_id: str
    machines: int
    controllers: int
    capabilities: int
    warnings: list[str] = Field(default_factory=list)


class ClockRequest(BaseModel):
    mode: str = "stepped"  # stepped | realtime_scaled
    scale: float = 1.0


class DeployRequest(BaseModel):
    mode: str = "virtual"  # virtual | physical
    clock: ClockRequest | None = None
    connect_retries: int = 3
    record_wire: bool = False


class DeploymentView(BaseModel):
    deployment_id: str
    plant_id: str
    mode: str
    status: str
    clock: dict
    endpoints: dict[str, list]
    adapters: dict[str, dict]


class ScenarioCreateRequest(BaseModel):
    plant_id: str
    goal: str


class CorrectiveRequest(BaseModel):
    note: str


class ScenarioView(BaseModel):
    scenario_id: str
    plant_id: str
    goal: str
    phase: str
    iteration: int
    corrective: str | None = None
    current_bpmn_xml: str | None = None
    last_validation_errors: list[str] = Field(default_factory=list)
    last_run_outcome: str | None = None
    accepted_doc_id: str | None = None
    history: list[dict] = Field(default_factory=list)


class RunStartRequest(BaseModel):
    bpmn_doc_id: str
    vars: dict = Field(default_factory=dict)


class RunStartResponse(BaseModel):
    run_id: str


class RunView(BaseModel):
    run_id: str
    deployment_id: str
    plant_id: str
    process_doc_id: str
    status: str
    detail: str = ""
    run_log_doc_id: str | None = None


class TelemetryResponse(BaseModel):
    samples: list[dict]


class DocumentView(BaseModel):
    doc_id: str
    kind: str
    content_hash: str
    created_at: float
    size: int


class PlantSummary(BaseModel):
    plant_id: str
    plant_name: str
    machines: int
    capabilities: int
    deployed: bool

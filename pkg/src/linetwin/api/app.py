"""FastAPI service wrapping the orchestrator. All routes live under /api/v1;
run event feeds stream newline-delimited JSON over a long-lived response.
"""

from __future__ import annotations

import json
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from ..bpmn import parse_bpmn, validate_process
from ..orchestrator import ClockSettings, Orchestrator, OrchestratorError
from ..orchestrator.config import ServiceConfig
from ..plantconfig import config_to_dict
from ..virtualplant import REALTIME_SCALED, STEPPED
from .schemas import (
    CorrectiveRequest,
    DeployRequest,
    DeploymentView,
    DocumentView,
    IngestResponse,
    PlantSummary,
    RunStartRequest,
    RunStartResponse,
    RunView,
    ScenarioCreateRequest,
    ScenarioView,
    TelemetryResponse,
)


def create_app(orchestrator: Orchestrator, service_config: ServiceConfig | None = None) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        await orchestrator.shutdown()

    app = FastAPI(title="linetwin", version="0.1.0", lifespan=lifespan)
    app.state.orchestrator = orchestrator

    @app.exception_handler(OrchestratorError)
    async def orchestrator_error_handler(_request: Request, exc: OrchestratorError):
        return JSONResponse(status_code=exc.status, content=exc.body())

    def scenario_view(state, accepted_doc_id=None) -> ScenarioView:
        data = state.to_dict()
        data["accepted_doc_id"] = accepted_doc_id or orchestrator.scenario_docs.get(state.scenario_id)
        return ScenarioView(**data)

    # -- plants ---------------------------------------------------------------

    @app.post("/api/v1/plants", response_model=IngestResponse)
    async def ingest_plant(request: Request):
        body = await request.body()
        if not body:
            raise OrchestratorError("bad_request", "request body must carry the AML document",
                                    status=400)
        result = orchestrator.ingest_plant(body)
        config = result["config"]
        return IngestResponse(
            plant_id=result["plant_id"],
            config_doc_id=result["config_doc_id"],
            machines=len(config.machines),
            controllers=len(config.controllers),
            capabilities=len(config.capabilities),
            warnings=result["warnings"],
        )

    @app.get("/api/v1/plants")
    async def list_plants():
        plants = []
        for plant_id, (config, _doc_id) in sorted(orchestrator.configs.items()):
            plants.append(PlantSummary(
                plant_id=plant_id,
                plant_name=config.plant_name,
                machines=len(config.machines),
                capabilities=len(config.capabilities),
                deployed=orchestrator.active_deployment_for(plant_id) is not None,
            ))
        return {"plants": [p.model_dump() for p in plants]}

    @app.get("/api/v1/plants/{plant_id}/config")
    async def get_plant_config(plant_id: str):
        return config_to_dict(orchestrator.get_config(plant_id))

    @app.post("/api/v1/plants/{plant_id}/deploy", response_model=DeploymentView)
    async def deploy_plant(plant_id: str, request: DeployRequest):
        clock_settings = None
        if request.clock is not None:
            if request.clock.mode not in (STEPPED, REALTIME_SCALED):
                raise OrchestratorError("bad_request",
                                        f"unknown clock mode {request.clock.mode!r}", status=400)
            clock_settings = ClockSettings(request.clock.mode, request.clock.scale)
        deployment = await orchestrator.deploy(
            plant_id, request.mode,
            clock_settings=clock_settings,
            connect_retries=request.connect_retries,
            record_wire=request.record_wire,
        )
        return DeploymentView(**deployment.to_dict())

    # -- deployments ------------------------------------------------------------

    @app.get("/api/v1/deployments/{deployment_id}", response_model=DeploymentView)
    async def get_deployment(deployment_id: str):
        return DeploymentView(**orchestrator.get_deployment(deployment_id).to_dict())

    @app.delete("/api/v1/deployments/{deployment_id}")
    async def stop_deployment(deployment_id: str):
        await orchestrator.stop_deployment(deployment_id)
        return {"stopped": deployment_id}

    # -- scenarios ---------------------------------------------------------------

    @app.post("/api/v1/scenarios", response_model=ScenarioView)
    async def create_scenario(request: ScenarioCreateRequest):
        state = orchestrator.create_scenario(request.plant_id, request.goal)
        return scenario_view(state)

    @app.get("/api/v1/scenarios/{scenario_id}", response_model=ScenarioView)
    async def get_scenario(scenario_id: str):
        return scenario_view(orchestrator.get_scenario(scenario_id))

    @app.post("/api/v1/scenarios/{scenario_id}/generate", response_model=ScenarioView)
    async def scenario_generate(scenario_id: str):
        result = await orchestrator.scenario_action(scenario_id, "generate")
        return scenario_view(result["state"], result.get("accepted_doc_id"))

    @app.post("/api/v1/scenarios/{scenario_id}/simulate", response_model=ScenarioView)
    async def scenario_simulate(scenario_id: str):
        result = await orchestrator.scenario_action(scenario_id, "simulate")
        return scenario_view(result["state"], result.get("accepted_doc_id"))

    @app.post("/api/v1/scenarios/{scenario_id}/corrective", response_model=ScenarioView)
    async def scenario_corrective(scenario_id: str, request: CorrectiveRequest):
        result = await orchestrator.scenario_action(scenario_id, "corrective", note=request.note)
        return scenario_view(result["state"], result.get("accepted_doc_id"))

    @app.post("/api/v1/scenarios/{scenario_id}/accept", response_model=ScenarioView)
    async def scenario_accept(scenario_id: str):
        result = await orchestrator.scenario_action(scenario_id, "accept")
        return scenario_view(result["state"], result.get("accepted_doc_id"))

    @app.get("/api/v1/scenarios/{scenario_id}/process")
    async def scenario_process(scenario_id: str):
        """Parsed JSON of the scenario's current candidate BPMN, for rendering."""
        state = orchestrator.get_scenario(scenario_id)
        if not state.current_bpmn_xml:
            raise OrchestratorError("not_found", "scenario has no candidate process yet", status=404)
        process = parse_bpmn(state.current_bpmn_xml, strict=False)
        validate_process(process, orchestrator.get_config(state.plant_id))
        return process.to_dict()

    # -- processes -------------------------------------------------------------------

    @app.post("/api/v1/processes")
    async def store_process(request: Request, name: str = "process"):
        body = await request.body()
        if not body:
            raise OrchestratorError("bad_request", "request body must carry the BPMN document",
                                    status=400)
        doc_id = orchestrator.store_process(body, name)
        return {"doc_id": doc_id}

    # -- runs ---------------------------------------------------------------------

    @app.post("/api/v1/deployments/{deployment_id}/runs", response_model=RunStartResponse)
    async def start_run(deployment_id: str, request: RunStartRequest):
        run_id = await orchestrator.start_run(deployment_id, request.bpmn_doc_id, request.vars)
        return RunStartResponse(run_id=run_id)

    @app.get("/api/v1/runs/{run_id}", response_model=RunView)
    async def get_run(run_id: str):
        record = orchestrator.get_run(run_id)
        return RunView(
            run_id=record["run_id"],
            deployment_id=record["deployment_id"],
            plant_id=record["plant_id"],
            process_doc_id=record["process_doc_id"],
            status=record["status"],
            detail=record.get("detail", ""),
            run_log_doc_id=record.get("run_log_doc_id"),
        )

    @app.get("/api/v1/runs/{run_id}/events")
    async def stream_run_events(run_id: str):
        orchestrator.get_run(run_id)  # 404 before the stream starts

        async def feed():
            async for event in orchestrator.run_events(run_id):
                yield json.dumps(event) + "\n"

        return StreamingResponse(feed(), media_type="application/x-ndjson")

    # -- telemetry -------------------------------------------------------------------

    @app.get("/api/v1/telemetry", response_model=TelemetryResponse)
    async def query_telemetry(filter: str = "#", from_s: float | None = None,
                              to_s: float | None = None):
        return TelemetryResponse(samples=orchestrator.query_telemetry(filter, from_s, to_s))

    # -- documents ----------------------------------------------------------------------

    @app.get("/api/v1/documents")
    async def list_documents(kind: str | None = None):
        return {"documents": [DocumentView(**d.to_dict()).model_dump()
                              for d in orchestrator.store.list(kind)]}

    @app.get("/api/v1/documents/{doc_id}")
    async def get_document(doc_id: str):
        body = orchestrator.store.read(doc_id)
        if body is None:
            raise OrchestratorError("not_found", f"unknown document {doc_id!r}", status=404)
        document = orchestrator.store.get(doc_id)
        media = "application/json" if document.kind in ("plant_config", "scenario_history") else \
            "application/xml" if document.kind in ("bpmn_process", "aml_source") else "text/plain"
        return Response(content=body, media_type=media)

    @app.get("/api/v1/documents/{doc_id}/process")
    async def get_document_as_process(doc_id: str):
        """Parsed process JSON for diagram rendering, bound to its plant when possible."""
        body = orchestrator.store.read(doc_id)
        if body is None:
            raise OrchestratorError("not_found", f"unknown document {doc_id!r}", status=404)
        process = parse_bpmn(body, strict=False)
        for config, _doc in orchestrator.configs.values():
            report = validate_process(process, config)
            if not report.has_errors():
                break
        return process.to_dict()

    @app.get("/api/v1/health")
    async def health():
        return {"status": "ok", "plants": len(orchestrator.configs),
                "deployments": len(orchestrator.deployments)}

    ui_dir = (service_config.ui_dir if service_config else "") or ""
    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def build_app(service_config: ServiceConfig) -> FastAPI:
    bridge = None
    if service_config.mqtt_bridge_url:
        from urllib.parse import urlparse

        from ..adapters.mqtt_bridge import MqttBridge

        parsed = urlparse(service_config.mqtt_bridge_url)
        bridge = MqttBridge(parsed.hostname or "127.0.0.1", parsed.port or 1883)
    orchestrator = Orchestrator(
        service_config.data_dir,
        role_mapping=service_config.role_mapping(),
        backend_factory=service_config.backend_factory(),
        telemetry_capacity=service_config.telemetry_capacity,
        telemetry_history=service_config.telemetry_history,
        poll_interval_ms=service_config.poll_interval_ms,
        mqtt_bridge=bridge,
    )
    return create_app(orchestrator, service_config)

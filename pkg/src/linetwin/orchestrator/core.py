"""Central coordination: plant ingestion, deployments, runs, scenarios.

This is the in-process service object the HTTP layer and the CLI both
drive. One instance owns the document store, the run registry, the
telemetry store, the active deployments, and the scenario loops.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import logging
import os
from pathlib import Path

from ..adapters import EventBus
from ..aml import CaexError, parse_caex, validate_structure
from ..bpmn import BpmnParseError, execute, parse_bpmn, validate_process
from ..bpmn.model import RunLog
from ..plantconfig import (
    ExtractionError,
    PlantConfig,
    RoleMapping,
    deserialize_config,
    extract_plant_config,
    serialize_config,
    slugify,
)
from ..scenario import (
    GenerationError,
    LlmBackend,
    LoopActionError,
    LoopContext,
    ScenarioLoopState,
    TemplateOfflineBackend,
    TransportError,
    advance_loop,
)
from ..scenario.loop import HistoryEntry
from ..virtualplant import STEPPED, PlantStartupError
from .deployment import ClockSettings, Deployment, DeploymentError, create_deployment
from .store import DocumentStore, RunRegistry, TelemetryStore, atomic_write

log = logging.getLogger(__name__)

import hashlib


class OrchestratorError(Exception):
    def __init__(self, code: str, message: str, detail: str = "", status: int = 400):
        super().__init__(message)
        self.code = code
        self.message = message
        self.detail = detail
        self.status = status

    def body(self) -> dict:
        return {"error": {"code": self.code, "message": self.message, "detail": self.detail}}


class RunStream:
    """Replay-then-live event feed for one run."""

    def __init__(self):
        self.events: list[dict] = []
        self.closed = False
        self._advanced = asyncio.Event()

    def append(self, payload: dict) -> None:
        payload = dict(payload)
        payload["seq"] = len(self.events)
        self.events.append(payload)
        self._wake()

    def close(self) -> None:
        self.closed = True
        self._wake()

    def _wake(self) -> None:
        waiters, self._advanced = self._advanced, asyncio.Event()
        waiters.set()

    async def iterate(self):
        index = 0
        while True:
            while index < len(self.events):
                yield self.events[index]
                index += 1
            if self.closed:
                return
            waiter = self._advanced
            if index < len(self.events) or self.closed:
                continue
            await waiter.wait()


class RunHandle:
    def __init__(self, run_id: str, deployment_id: str):
        self.run_id = run_id
        self.deployment_id = deployment_id
        self.stream = RunStream()
        self.task: asyncio.Task | None = None
        self.log: RunLog | None = None


class _RunScopedDispatcher:
    """Tracks which command ids belong to one run, for event attribution."""

    def __init__(self, inner):
        self.inner = inner
        self.command_ids: set[str] = set()

    async def submit(self, capability_id, params):
        command_id, reason = await self.inner.submit(capability_id, params)
        if command_id is not None:
            self.command_ids.add(command_id)
        return command_id, reason

    async def wait_terminal(self, command_id):
        return await self.inner.wait_terminal(command_id)


class Orchestrator:
    def __init__(
        self,
        data_dir: str | Path,
        role_mapping: RoleMapping | None = None,
        backend_factory=None,
        telemetry_capacity: int = 10_000,
        telemetry_history: bool = False,
        poll_interval_ms: int = 100,
        mqtt_bridge=None,
    ):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.store = DocumentStore(self.data_dir)
        self.runs = RunRegistry(self.data_dir)
        self.telemetry = TelemetryStore(
            capacity=telemetry_capacity,
            history_path=self.data_dir / "telemetry.ndjson" if telemetry_history else None,
        )
        self.role_mapping = role_mapping or RoleMapping.default()
        self.backend_factory = backend_factory or (lambda config: TemplateOfflineBackend(config))
        self.poll_interval_ms = poll_interval_ms
        self.mqtt_bridge = mqtt_bridge
        self.configs: dict[str, tuple[PlantConfig, str]] = {}
        self.deployments: dict[str, Deployment] = {}
        self.run_handles: dict[str, RunHandle] = {}
        self.scenarios: dict[str, ScenarioLoopState] = {}
        self.scenario_docs: dict[str, str] = {}
        self._run_seq = itertools.count(1)
        self._scenario_seq = itertools.count(1)
        self._reload()

    def _reload(self) -> None:
        for document in self.store.list(kind="plant_config"):
            body = self.store.read(document.doc_id)
            try:
                config = deserialize_config(body)
            except Exception as exc:
                log.warning("skipping unreadable plant config %s: %s", document.doc_id, exc)
                continue
            self.configs[config.plant_id] = (config, document.doc_id)
        scenario_dir = self.data_dir / "scenarios"
        if scenario_dir.is_dir():
            for path in sorted(scenario_dir.glob("*.json")):
                try:
                    data = json.loads(path.read_text(encoding="utf-8"))
                    state = _scenario_from_dict(data["state"])
                    self.scenarios[state.scenario_id] = state
                    if data.get("accepted_doc_id"):
                        self.scenario_docs[state.scenario_id] = data["accepted_doc_id"]
                except Exception as exc:
                    log.warning("skipping unreadable scenario %s: %s", path, exc)

    # -- plants ---------------------------------------------------------------

    def ingest_plant(self, aml_bytes: bytes) -> dict:
        try:
            doc = parse_caex(aml_bytes)
        except CaexError as exc:
            raise OrchestratorError("parse_error", "AML parsing failed", str(exc), 400) from exc
        report = validate_structure(doc)
        if report.has_errors():
            raise OrchestratorError("structure_error", "AML document is inconsistent",
                                    "; ".join(str(f) for f in report.errors), 400)
        content_hash = hashlib.sha256(aml_bytes).hexdigest()
        plant_name = doc.instance_hierarchies[0].name if doc.instance_hierarchies else "plant"
        plant_id = f"{slugify(plant_name)}-{content_hash[:8]}"
        try:
            result = extract_plant_config(doc, self.role_mapping, plant_id=plant_id)
        except ExtractionError as exc:
            raise OrchestratorError("extraction_error", "concept extraction failed",
                                    "; ".join(exc.errors), 400) from exc
        config = result.config
        self.store.put("aml_source", aml_bytes, plant_name)
        config_doc = self.store.put("plant_config", serialize_config(config).encode(), plant_id)
        self.configs[plant_id] = (config, config_doc.doc_id)
        return {
            "plant_id": plant_id,
            "config": config,
            "config_doc_id": config_doc.doc_id,
            "warnings": result.warnings,
            "structure_findings": [str(f) for f in report.findings],
        }

    def get_config(self, plant_id: str) -> PlantConfig:
        entry = self.configs.get(plant_id)
        if entry is None:
            raise OrchestratorError("not_found", f"unknown plant {plant_id!r}", status=404)
        return entry[0]

    # -- deployments ----------------------------------------------------------

    def active_deployment_for(self, plant_id: str) -> Deployment | None:
        for deployment in self.deployments.values():
            if deployment.plant_id == plant_id and deployment.status != "stopped":
                return deployment
        return None

    async def deploy(self, plant_id: str, mode: str,
                     clock_settings: ClockSettings | None = None,
                     connect_retries: int = 3,
                     record_wire: bool = False) -> Deployment:
        config = self.get_config(plant_id)
        if self.active_deployment_for(plant_id) is not None:
            raise OrchestratorError("conflict", f"plant {plant_id} already has an active deployment",
                                    status=409)
        bus = EventBus()
        bus.add_telemetry_listener(self.telemetry.append)
        if self.mqtt_bridge is not None:
            self.mqtt_bridge.attach(bus)
        try:
            deployment = await create_deployment(
                config, mode,
                clock_settings=clock_settings,
                bus=bus,
                poll_interval_ms=self.poll_interval_ms,
                connect_retries=connect_retries,
                record_wire=record_wire,
            )
        except (DeploymentError, PlantStartupError) as exc:
            raise OrchestratorError("deploy_error", "deployment failed", str(exc), 400) from exc
        self.deployments[deployment.deployment_id] = deployment
        return deployment

    def get_deployment(self, deployment_id: str) -> Deployment:
        deployment = self.deployments.get(deployment_id)
        if deployment is None:
            raise OrchestratorError("not_found", f"unknown deployment {deployment_id!r}", status=404)
        return deployment

    async def stop_deployment(self, deployment_id: str) -> None:
        deployment = self.get_deployment(deployment_id)
        await deployment.stop()

    # -- processes & runs -------------------------------------------------------

    def store_process(self, xml: str | bytes, name: str) -> str:
        body = xml.encode() if isinstance(xml, str) else xml
        try:
            parse_bpmn(body, strict=True)
        except BpmnParseError as exc:
            raise OrchestratorError("parse_error", "BPMN parsing failed",
                                    "; ".join(exc.errors), 400) from exc
        return self.store.put("bpmn_process", body, name).doc_id

    async def start_run(self, deployment_id: str, bpmn_doc_id: str,
                        vars: dict | None = None) -> str:
        deployment = self.get_deployment(deployment_id)
        if deployment.status != "ready":
            raise OrchestratorError("conflict", f"deployment is {deployment.status}, not ready",
                                    status=409)
        body = self.store.read(bpmn_doc_id)
        if body is None:
            raise OrchestratorError("not_found", f"unknown document {bpmn_doc_id!r}", status=404)
        try:
            process = parse_bpmn(body, strict=True)
        except BpmnParseError as exc:
            raise OrchestratorError("parse_error", "BPMN parsing failed",
                                    "; ".join(exc.errors), 400) from exc
        report = validate_process(process, deployment.config)
        if report.has_errors():
            raise OrchestratorError("validation_error", "process does not validate against the plant",
                                    "; ".join(report.messages()), 400)

        run_id = f"run-{next(self._run_seq)}-{os.urandom(3).hex()}"
        self.runs.start(run_id, deployment_id, deployment.plant_id, bpmn_doc_id)
        handle = RunHandle(run_id, deployment_id)
        self.run_handles[run_id] = handle
        handle.task = asyncio.create_task(
            self._execute_run(handle, deployment, process, dict(vars or {})))
        return run_id

    async def _execute_run(self, handle: RunHandle, deployment: Deployment,
                           process, vars: dict) -> None:
        dispatcher = _RunScopedDispatcher(deployment.dispatcher)
        event_queue = deployment.bus.subscribe_events()
        forwarder = asyncio.create_task(
            self._forward_adapter_events(event_queue, dispatcher, handle))
        await deployment.start_run_pump()
        try:
            run_log = await execute(
                process,
                dispatcher,
                vars=vars,
                clock=deployment.clock,
                run_id=handle.run_id,
                mode=deployment.mode,
                observer=lambda entry: handle.stream.append({"source": "engine", **entry.to_dict()}),
            )
        except Exception as exc:  # engine bugs must still settle the run
            log.exception("run %s crashed", handle.run_id)
            run_log = RunLog(run_id=handle.run_id, process_id=process.process_id,
                             mode=deployment.mode, outcome="failed",
                             stats={"failure": f"internal error: {exc}"})
        finally:
            await deployment.end_run_pump()
            forwarder.cancel()
            try:
                await forwarder
            except asyncio.CancelledError:
                pass
            deployment.bus.unsubscribe_events(event_queue)

        handle.log = run_log
        log_doc = self.store.put("run_log", run_log.to_ndjson().encode(), handle.run_id)
        self.runs.finish(handle.run_id, run_log.outcome, run_log_doc_id=log_doc.doc_id,
                         detail=run_log.stats.get("failure", ""))
        handle.stream.append({"source": "run", "outcome": run_log.outcome,
                              "stats": run_log.stats})
        handle.stream.close()

    async def _forward_adapter_events(self, queue: asyncio.Queue,
                                      dispatcher: _RunScopedDispatcher,
                                      handle: RunHandle) -> None:
        while True:
            event = await queue.get()
            if event.command_id and event.command_id in dispatcher.command_ids:
                handle.stream.append({"source": "adapter", **event.to_dict()})

    def get_run(self, run_id: str) -> dict:
        record = self.runs.get(run_id)
        if record is None:
            raise OrchestratorError("not_found", f"unknown run {run_id!r}", status=404)
        return record

    async def run_events(self, run_id: str):
        record = self.get_run(run_id)
        handle = self.run_handles.get(run_id)
        if handle is not None:
            async for event in handle.stream.iterate():
                yield event
            return
        # Recovered run from a previous process: replay the stored log.
        seq = 0
        log_doc_id = record.get("run_log_doc_id")
        if log_doc_id:
            body = self.store.read(log_doc_id)
            if body:
                lines = body.decode().splitlines()
                for line in lines[1:]:
                    entry = json.loads(line)
                    yield {"source": "engine", "seq": seq, **entry}
                    seq += 1
        yield {"source": "run", "seq": seq, "outcome": record["status"],
               "stats": {}, "detail": record.get("detail", "")}

    # -- telemetry --------------------------------------------------------------

    def query_telemetry(self, topic_filter: str = "#", from_s: float | None = None,
                        to_s: float | None = None) -> list[dict]:
        try:
            samples = self.telemetry.query(topic_filter, from_s, to_s)
        except ValueError as exc:
            raise OrchestratorError("bad_request", str(exc), status=400) from exc
        return [s.to_dict() for s in samples]

    # -- scenarios ----------------------------------------------------------------

    def create_scenario(self, plant_id: str, goal: str) -> ScenarioLoopState:
        self.get_config(plant_id)
        if not goal.strip():
            raise OrchestratorError("bad_request", "goal must be non-empty", status=400)
        scenario_id = f"scn-{next(self._scenario_seq)}-{os.urandom(3).hex()}"
        state = ScenarioLoopState(scenario_id=scenario_id, plant_id=plant_id, goal=goal)
        self.scenarios[scenario_id] = state
        self._persist_scenario(state)
        return state

    def get_scenario(self, scenario_id: str) -> ScenarioLoopState:
        state = self.scenarios.get(scenario_id)
        if state is None:
            raise OrchestratorError("not_found", f"unknown scenario {scenario_id!r}", status=404)
        return state

    async def scenario_action(self, scenario_id: str, action: str, note: str | None = None) -> dict:
        state = self.get_scenario(scenario_id)
        config = self.get_config(state.plant_id)
        try:
            backend = self._backend_for(config)
        except ValueError as exc:
            raise OrchestratorError("config_error", "LLM backend is not configured",
                                    str(exc), 400) from exc
        context = LoopContext(
            config=config,
            backend=backend,
            simulator=self._simulator_for(config),
        )
        try:
            await advance_loop(state, action, context, note=note)
        except LoopActionError as exc:
            self._persist_scenario(state)
            raise OrchestratorError("illegal_action", str(exc), status=409) from exc
        except (TransportError, GenerationError) as exc:
            self._persist_scenario(state)
            raise OrchestratorError("generation_error", str(exc), status=502) from exc

        accepted_doc_id = None
        if state.phase == "accepted" and state.current_bpmn_xml:
            accepted_doc_id = self.store.put(
                "bpmn_process", state.current_bpmn_xml.encode(), f"{scenario_id}-process").doc_id
            self.store.put(
                "scenario_history", json.dumps(state.to_dict(), indent=2).encode(), scenario_id)
            self.scenario_docs[scenario_id] = accepted_doc_id
        self._persist_scenario(state)
        result = {"state": state, "accepted_doc_id": self.scenario_docs.get(scenario_id)}
        return result

    def _backend_for(self, config: PlantConfig) -> LlmBackend:
        return self.backend_factory(config)

    def _simulator_for(self, config: PlantConfig):
        async def simulate(process, xml: str) -> RunLog:
            bus = EventBus()
            bus.add_telemetry_listener(self.telemetry.append)
            deployment = await create_deployment(
                config, "virtual",
                clock_settings=ClockSettings(STEPPED),
                bus=bus,
                poll_interval_ms=self.poll_interval_ms,
            )
            if deployment.status != "ready":
                await deployment.stop()
                raise OrchestratorError("deploy_error", "simulation deployment failed", status=500)
            await deployment.start_run_pump()
            try:
                return await execute(process, deployment.dispatcher,
                                     clock=deployment.clock, run_id="sim", mode="virtual")
            finally:
                await deployment.end_run_pump()
                await deployment.stop()

        return simulate

    def _persist_scenario(self, state: ScenarioLoopState) -> None:
        scenario_dir = self.data_dir / "scenarios"
        scenario_dir.mkdir(exist_ok=True)
        payload = {"state": state.to_dict(),
                   "accepted_doc_id": self.scenario_docs.get(state.scenario_id)}
        atomic_write(scenario_dir / f"{state.scenario_id}.json",
                     json.dumps(payload, indent=2).encode())

    async def shutdown(self) -> None:
        if self.mqtt_bridge is not None:
            await self.mqtt_bridge.close()
        for run_handle in self.run_handles.values():
            if run_handle.task is not None and not run_handle.task.done():
                run_handle.task.cancel()
                try:
                    await run_handle.task
                except (asyncio.CancelledError, Exception):
                    pass
        for deployment in list(self.deployments.values()):
            if deployment.status != "stopped":
                await deployment.stop()


def _scenario_from_dict(data: dict) -> ScenarioLoopState:
    state = ScenarioLoopState(
        scenario_id=data["scenario_id"],
        plant_id=data["plant_id"],
        goal=data["goal"],
        phase=data.get("phase", "drafting"),
        iteration=data.get("iteration", 0),
        corrective=data.get("corrective"),
        current_bpmn_xml=data.get("current_bpmn_xml"),
        last_validation_errors=list(data.get("last_validation_errors", [])),
        last_run_outcome=data.get("last_run_outcome"),
    )
    for raw in data.get("history", []):
        state.history.append(HistoryEntry(
            iteration=raw.get("iteration", 0),
            action=raw.get("action", ""),
            prompt=raw.get("prompt"),
            raw_response=raw.get("raw_response"),
            bpmn_xml=raw.get("bpmn_xml"),
            validation_messages=list(raw.get("validation_messages", [])),
            run_log=raw.get("run_log"),
            supervisor_note=raw.get("supervisor_note"),
        ))
    return state

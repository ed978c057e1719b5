"""Command line driver for every pipeline stage.

With --server URL (or LINETWIN_SERVER) commands talk to a running service;
without it they run against an in-process orchestrator on --data-dir.
Exit codes: 0 success, 1 domain error, 2 usage error. Every subcommand
takes --json for machine-readable output.
"""

from __future__ import annotations

import asyncio
import json
import sys
from pathlib import Path

import click
import httpx

from .aml import CaexError, parse_caex, validate_structure
from .bpmn import BpmnParseError, parse_bpmn, validate_process
from .orchestrator import ClockSettings, Orchestrator, OrchestratorError
from .orchestrator.config import load_config
from .plantconfig import (
    ConfigError,
    ExtractionError,
    RoleMapping,
    deserialize_config,
    extract_plant_config,
    serialize_config,
)
from .virtualplant import REALTIME_SCALED, STEPPED


class Session:
    def __init__(self, server: str | None, data_dir: str, json_mode: bool):
        self.server = server.rstrip("/") if server else None
        self.data_dir = data_dir
        self.json_mode = json_mode

    def api(self) -> httpx.Client:
        return httpx.Client(base_url=self.server, timeout=60.0)

    def orchestrator(self) -> Orchestrator:
        return Orchestrator(self.data_dir)

    def emit(self, data: dict, human: str | None = None) -> None:
        if self.json_mode:
            click.echo(json.dumps(data, indent=2))
        else:
            click.echo(human if human is not None else json.dumps(data, indent=2))


def _fail(session: Session, code: str, message: str, detail: str = "") -> None:
    body = {"error": {"code": code, "message": message, "detail": detail}}
    if session.json_mode:
        click.echo(json.dumps(body, indent=2), err=True)
    else:
        click.echo(f"error: {message}" + (f" ({detail})" if detail else ""), err=True)
    sys.exit(1)


def _check_response(session: Session, response: httpx.Response) -> dict:
    if response.status_code // 100 != 2:
        try:
            error = response.json().get("error", {})
        except json.JSONDecodeError:
            error = {"code": "http_error", "message": response.text[:200]}
        _fail(session, error.get("code", "http_error"),
              error.get("message", f"HTTP {response.status_code}"), error.get("detail", ""))
    return response.json() if response.content else {}


@click.group()
@click.option("--server", envvar="LINETWIN_SERVER", default=None,
              help="Base URL of a running service; otherwise run in-process.")
@click.option("--data-dir", envvar="LINETWIN_DATA_DIR", default="./linetwin-data",
              show_default=True, help="Data directory for in-process mode.")
@click.option("--json", "json_mode", is_flag=True, help="Machine-readable output.")
@click.pass_context
def main(ctx, server, data_dir, json_mode):
    """Digital twin toolchain: parse plant models, emulate, execute processes."""
    ctx.obj = Session(server, data_dir, json_mode)


@main.command()
@click.argument("aml_file", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def parse(session: Session, aml_file):
    """Parse an AML file and print the hierarchy summary."""
    try:
        doc = parse_caex(Path(aml_file).read_bytes())
    except CaexError as exc:
        _fail(session, "parse_error", "AML parsing failed", str(exc))
    lines = []
    counts = {"elements": 0}

    def visit(element, depth):
        counts["elements"] += 1
        roles = f"  [{', '.join(element.role_requirements)}]" if element.role_requirements else ""
        lines.append("  " * depth + f"- {element.name}{roles}")
        for child in element.children:
            visit(child, depth + 1)

    for hierarchy in doc.instance_hierarchies:
        lines.append(f"InstanceHierarchy {hierarchy.name}")
        for element in hierarchy.elements:
            visit(element, 1)
    summary = {
        "file_name": doc.file_name,
        "hierarchies": [h.name for h in doc.instance_hierarchies],
        "elements": counts["elements"],
        "role_class_libs": [lib.name for lib in doc.role_class_libs],
        "system_unit_class_libs": [lib.name for lib in doc.system_unit_class_libs],
        "interface_class_libs": [lib.name for lib in doc.interface_class_libs],
    }
    session.emit(summary, "\n".join(lines) or "(empty document)")


@main.command()
@click.argument("aml_file", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="Write the plant config JSON here instead of stdout.")
@click.option("--roles", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Role mapping JSON (defaults to the shipped mapping).")
@click.pass_obj
def extract(session: Session, aml_file, output, roles):
    """Extract the plant config (machines, controllers, capabilities)."""
    try:
        doc = parse_caex(Path(aml_file).read_bytes())
        mapping = RoleMapping.load(roles) if roles else RoleMapping.default()
        result = extract_plant_config(doc, mapping)
    except (CaexError, ExtractionError, ValueError) as exc:
        _fail(session, "extraction_error", "extraction failed", str(exc))
    text = serialize_config(result.config)
    for warning in result.warnings:
        click.echo(f"warning: {warning}", err=True)
    if output:
        Path(output).write_text(text, encoding="utf-8")
        session.emit({"output": output, "machines": len(result.config.machines),
                      "warnings": result.warnings},
                     f"wrote {output} ({len(result.config.machines)} machines, "
                     f"{len(result.config.capabilities)} capabilities)")
    else:
        click.echo(text, nl=False)


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--plant-config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Validate a BPMN file against this plant config.")
@click.pass_obj
def validate(session: Session, file, plant_config):
    """Validate an AML document or (with --plant-config) a BPMN process."""
    findings = []
    if plant_config:
        try:
            process = parse_bpmn(Path(file).read_bytes())
            config = deserialize_config(Path(plant_config).read_text(encoding="utf-8"))
        except (BpmnParseError, ConfigError) as exc:
            _fail(session, "parse_error", "parsing failed", str(exc))
        report = validate_process(process, config)
        findings = report.messages()
    else:
        try:
            doc = parse_caex(Path(file).read_bytes())
        except CaexError as exc:
            _fail(session, "parse_error", "AML parsing failed", str(exc))
        report = validate_structure(doc)
        findings = report.messages()
    session.emit({"findings": findings, "ok": not report.has_errors()},
                 "\n".join(findings) if findings else "ok")
    if report.has_errors():
        sys.exit(1)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Service config JSON file.")
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.pass_obj
def serve(session: Session, config_path, host, port):
    """Run the orchestrator HTTP service."""
    import uvicorn

    from .api import build_app

    service_config = load_config(config_path)
    if session.data_dir != "./linetwin-data":
        service_config.data_dir = session.data_dir
    if host:
        service_config.host = host
    if port:
        service_config.port = port
    app = build_app(service_config)
    uvicorn.run(app, host=service_config.host, port=service_config.port, log_level="info")


def _clock_settings(clock: str, scale: float) -> ClockSettings:
    mode = STEPPED if clock == "stepped" else REALTIME_SCALED
    return ClockSettings(mode, scale)


@main.command()
@click.option("--virtual/--physical", "virtual", default=True, show_default=True)
@click.option("--plant", "plant_id", default=None, help="Plant id (server mode).")
@click.option("--aml", type=click.Path(exists=True, dir_okay=False), default=None,
              help="AML file to ingest first (defaults to the bundled demo plant in-process).")
@click.option("--clock", type=click.Choice(["stepped", "realtime"]), default=None)
@click.option("--scale", type=float, default=1.0, show_default=True)
@click.pass_obj
def deploy(session: Session, virtual, plant_id, aml, clock, scale):
    """Deploy a twin. In-process mode keeps the emulator running until Ctrl-C."""
    mode = "virtual" if virtual else "physical"
    clock = clock or ("realtime" if virtual else "realtime")
    if session.server:
        with session.api() as api:
            if plant_id is None:
                if not aml:
                    raise click.UsageError("--plant or --aml is required in server mode")
                data = _check_response(session, api.post(
                    "/api/v1/plants", content=Path(aml).read_bytes()))
                plant_id = data["plant_id"]
            body = {"mode": mode,
                    "clock": {"mode": _clock_settings(clock, scale).mode, "scale": scale}}
            data = _check_response(session, api.post(f"/api/v1/plants/{plant_id}/deploy", json=body))
            session.emit(data, f"deployment {data['deployment_id']} is {data['status']}")
        return

    async def run_deploy():
        orchestrator = session.orchestrator()
        aml_bytes = Path(aml).read_bytes() if aml else _demo_bytes()
        ingest = orchestrator.ingest_plant(aml_bytes)
        deployment = await orchestrator.deploy(
            ingest["plant_id"], mode, clock_settings=_clock_settings(clock, scale))
        info = deployment.to_dict()
        session.emit(info,
                     f"deployment {deployment.deployment_id} is {deployment.status}; endpoints: "
                     + ", ".join(f"{cid} -> {host}:{port}"
                                 for cid, (host, port) in (deployment.plant.endpoints.items()
                                                           if deployment.plant else [])))
        click.echo("press Ctrl-C to stop", err=True)
        try:
            while True:
                await asyncio.sleep(3600)
        except (KeyboardInterrupt, asyncio.CancelledError):
            pass
        finally:
            await orchestrator.shutdown()

    try:
        asyncio.run(run_deploy())
    except KeyboardInterrupt:
        pass
    except OrchestratorError as exc:
        _fail(session, exc.code, exc.message, exc.detail)


def _demo_bytes() -> bytes:
    from .fixtures import demo_plant_xml

    return demo_plant_xml().encode()


@main.command(name="run")
@click.argument("process_ref")
@click.option("--deployment", "deployment_id", default=None, help="Deployment id (server mode).")
@click.option("--aml", type=click.Path(exists=True, dir_okay=False), default=None,
              help="AML file for the ephemeral in-process twin (default: demo plant).")
@click.option("--vars", "vars_json", default="{}", help="Initial variables as JSON.")
@click.option("--watch", is_flag=True, help="Stream run entries as they happen.")
@click.pass_obj
def run_process(session: Session, process_ref, deployment_id, aml, vars_json, watch):
    """Execute a BPMN process (file path, or doc id in server mode)."""
    try:
        variables = json.loads(vars_json)
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"--vars is not valid JSON: {exc}")

    if session.server:
        with session.api() as api:
            if Path(process_ref).exists():
                data = _check_response(session, api.post(
                    "/api/v1/processes", content=Path(process_ref).read_bytes(),
                    params={"name": Path(process_ref).stem}))
                doc_id = data["doc_id"]
            else:
                doc_id = process_ref
            if not deployment_id:
                raise click.UsageError("--deployment is required in server mode")
            data = _check_response(session, api.post(
                f"/api/v1/deployments/{deployment_id}/runs",
                json={"bpmn_doc_id": doc_id, "vars": variables}))
            run_id = data["run_id"]
            outcome = None
            with api.stream("GET", f"/api/v1/runs/{run_id}/events", timeout=None) as response:
                for line in response.iter_lines():
                    if not line:
                        continue
                    event = json.loads(line)
                    if watch:
                        click.echo(json.dumps(event) if session.json_mode else _format_event(event))
                    if event.get("source") == "run":
                        outcome = event.get("outcome")
            session.emit({"run_id": run_id, "outcome": outcome}, f"run {run_id}: {outcome}")
            sys.exit(0 if outcome == "completed" else 1)
        return

    if not Path(process_ref).exists():
        _fail(session, "not_found", f"process file {process_ref!r} not found")

    async def run_ephemeral():
        orchestrator = session.orchestrator()
        aml_bytes = Path(aml).read_bytes() if aml else _demo_bytes()
        ingest = orchestrator.ingest_plant(aml_bytes)
        doc_id = orchestrator.store_process(Path(process_ref).read_bytes(), Path(process_ref).stem)
        deployment = await orchestrator.deploy(ingest["plant_id"], "virtual",
                                               clock_settings=ClockSettings(STEPPED))
        try:
            run_id = await orchestrator.start_run(deployment.deployment_id, doc_id, variables)
            outcome = None
            async for event in orchestrator.run_events(run_id):
                if watch:
                    click.echo(json.dumps(event) if session.json_mode else _format_event(event))
                if event.get("source") == "run":
                    outcome = event.get("outcome")
            return run_id, outcome
        finally:
            await orchestrator.stop_deployment(deployment.deployment_id)
            await orchestrator.shutdown()

    try:
        run_id, outcome = asyncio.run(run_ephemeral())
    except OrchestratorError as exc:
        _fail(session, exc.code, exc.message, exc.detail)
    session.emit({"run_id": run_id, "outcome": outcome}, f"run {run_id}: {outcome}")
    sys.exit(0 if outcome == "completed" else 1)


def _format_event(event: dict) -> str:
    if event.get("source") == "engine":
        return f"[{event.get('at', 0):8.2f}] {event.get('node_id')} {event.get('phase')} {event.get('detail', '')}"
    if event.get("source") == "adapter":
        return f"[{event.get('at', 0):8.2f}] command {event.get('command_id')} {event.get('kind')}"
    return f"run finished: {event.get('outcome')}"


@main.command()
@click.option("--steps", default=None, help='Step list, e.g. "LoadFromWarehouse, Stamp".')
@click.option("--goal", default=None, help="Full goal text (alternative to --steps).")
@click.option("--plant", "plant_id", default=None, help="Plant id (server mode).")
@click.option("--aml", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--simulate/--no-simulate", default=True, show_default=True)
@click.option("--accept", "accept_flag", is_flag=True, help="Accept after a completed simulation.")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="Write the generated BPMN here.")
@click.pass_obj
def generate(session: Session, steps, goal, plant_id, aml, simulate, accept_flag, output):
    """Drive the scenario loop: generate (offline backend), simulate, accept."""
    if not steps and not goal:
        raise click.UsageError("--steps or --goal is required")
    goal_text = goal or f"steps: [{steps}]"

    if session.server:
        with session.api() as api:
            if plant_id is None:
                if not aml:
                    raise click.UsageError("--plant or --aml is required in server mode")
                plant_id = _check_response(session, api.post(
                    "/api/v1/plants", content=Path(aml).read_bytes()))["plant_id"]
            state = _check_response(session, api.post(
                "/api/v1/scenarios", json={"plant_id": plant_id, "goal": goal_text}))
            scenario_id = state["scenario_id"]
            state = _check_response(session, api.post(f"/api/v1/scenarios/{scenario_id}/generate"))
            if simulate and state["phase"] == "validated":
                state = _check_response(session, api.post(f"/api/v1/scenarios/{scenario_id}/simulate"))
            if accept_flag and state["phase"] == "awaiting_review":
                state = _check_response(session, api.post(f"/api/v1/scenarios/{scenario_id}/accept"))
    else:
        async def run_generate():
            orchestrator = session.orchestrator()
            aml_bytes = Path(aml).read_bytes() if aml else _demo_bytes()
            ingest = orchestrator.ingest_plant(aml_bytes)
            state = orchestrator.create_scenario(ingest["plant_id"], goal_text)
            scenario_id = state.scenario_id
            result = await orchestrator.scenario_action(scenario_id, "generate")
            if simulate and result["state"].phase == "validated":
                result = await orchestrator.scenario_action(scenario_id, "simulate")
            if accept_flag and result["state"].phase == "awaiting_review":
                result = await orchestrator.scenario_action(scenario_id, "accept")
            view = result["state"].to_dict()
            view["accepted_doc_id"] = result.get("accepted_doc_id")
            return view

        try:
            state = asyncio.run(run_generate())
        except OrchestratorError as exc:
            _fail(session, exc.code, exc.message, exc.detail)

    xml = state.get("current_bpmn_xml")
    if output and xml:
        Path(output).write_text(xml, encoding="utf-8")
    summary = {
        "scenario_id": state["scenario_id"],
        "phase": state["phase"],
        "iteration": state["iteration"],
        "last_run_outcome": state.get("last_run_outcome"),
        "accepted_doc_id": state.get("accepted_doc_id"),
        "output": output,
    }
    human = (f"scenario {state['scenario_id']}: phase={state['phase']}"
             + (f", run={state.get('last_run_outcome')}" if state.get("last_run_outcome") else "")
             + (f", wrote {output}" if output and xml else ""))
    session.emit(summary, human)
    if state["phase"] in ("validated", "awaiting_review", "accepted"):
        sys.exit(0)
    sys.exit(1)


@main.command()
@click.option("--filter", "topic_filter", default="#", show_default=True)
@click.option("--from", "from_s", type=float, default=None)
@click.option("--to", "to_s", type=float, default=None)
@click.pass_obj
def telemetry(session: Session, topic_filter, from_s, to_s):
    """Query recorded telemetry samples."""
    if session.server:
        with session.api() as api:
            params = {"filter": topic_filter}
            if from_s is not None:
                params["from_s"] = from_s
            if to_s is not None:
                params["to_s"] = to_s
            data = _check_response(session, api.get("/api/v1/telemetry", params=params))
            samples = data["samples"]
    else:
        try:
            samples = session.orchestrator().query_telemetry(topic_filter, from_s, to_s)
        except OrchestratorError as exc:
            _fail(session, exc.code, exc.message, exc.detail)
    session.emit({"samples": samples},
                 "\n".join(f"[{s['at']:10.3f}] {s['topic']} = {s['value']}" for s in samples)
                 or "(no samples)")


if __name__ == "__main__":
    main()

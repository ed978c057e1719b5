"""Acceptance suite: scenario- and property-based exit criteria.

Each test prints one PASS line on success (run with -s or -v to see them).
Budgets are wall-clock and asserted inside the tests.
"""

import asyncio
import copy
import json
import os
import random
import signal
import socket
import struct
import subprocess
import sys
import time

import httpx
import pytest

from linetwin.aml import parse_caex
from linetwin.bpmn import execute, parse_bpmn
from linetwin.fixtures import demo_plant_xml
from linetwin.orchestrator import ClockSettings, Orchestrator, create_deployment
from linetwin.plantconfig import extract_plant_config, serialize_config
from linetwin.scenario import TemplateOfflineBackend, assemble_prompt
from linetwin.virtualplant import (
    REALTIME_SCALED,
    STEPPED,
    PlcState,
    SimClock,
    behavior_for,
    init_behavior_state,
    modbus_handle_adu,
    start_virtual_plant,
)
from linetwin.plantconfig.model import BUSY_OFFSET

from .conftest import run
from .modbus_ref import ShadowModel, TcpClient, build_adu, split_adu
from .test_modbus_core import _random_pdu

PROCESS1_STEPS = ("steps: [LoadFromWarehouse, RobotCommand(to=punch), Stamp, "
                  "RobotCommand(to=index), MillAndDrill, StoreToWarehouse]")
PROCESS1_DISPATCH = [
    "high-bay-warehouse.load-from-warehouse",
    "robot-arm.robot-command(to=punch)",
    "punching-machine.stamp",
    "robot-arm.robot-command(to=index)",
    "indexed-line.mill-and-drill",
    "high-bay-warehouse.store-to-warehouse",
]
PROCESS2_STEPS = ("steps: [LoadFromWarehouse, RobotCommand(to=index), MillAndDrill, "
                  "RobotCommand(to=punch), Stamp, RobotCommand(to=index), MillAndDrill, "
                  "StoreToWarehouse]")


def _passed(n: int, text: str) -> None:
    print(f"ACCEPTANCE {n}: PASS — {text}")


# -- 1. fixture extraction ----------------------------------------------------

def test_criterion_1_fixture_extraction():
    started = time.monotonic()
    xml = demo_plant_xml()
    doc = parse_caex(xml)
    config = extract_plant_config(doc).config

    kinds = sorted(m.kind for m in config.machines)
    assert kinds == ["processing_station", "processing_station", "robot", "warehouse"]
    assert len(config.machines) == 4
    assert sorted(c.kind for c in config.controllers) == ["modbus_plc", "robot_gateway"]
    names = sorted(c.name for c in config.capabilities)
    assert names == ["LoadFromWarehouse", "MillAndDrill", "RobotCommand", "Stamp", "StoreToWarehouse"]

    first = serialize_config(extract_plant_config(parse_caex(xml)).config)
    second = serialize_config(extract_plant_config(parse_caex(xml)).config)
    assert first.encode() == second.encode()  # byte-identical across runs

    elapsed = time.monotonic() - started
    assert elapsed < 1.0, f"extraction took {elapsed:.2f}s, budget 1s"
    _passed(1, f"4 machines, 2 controllers, 5 capabilities, deterministic JSON ({elapsed:.2f}s)")


# -- 2. Modbus conformance ----------------------------------------------------

def test_criterion_2_modbus_conformance(demo_config):
    started = time.monotonic()

    async def scenario():
        plant = await start_virtual_plant(demo_config, SimClock(STEPPED))
        host, port = plant.endpoints["plc1"]

        # The pure-core oracle starts from the same initial register state
        # the plant seeds (warehouse occupancy).
        oracle_state = PlcState(unit_id=1)
        for machine in demo_config.controller_machines("plc1"):
            caps = [c for c in demo_config.machine_capabilities(machine.machine_id)]
            base = caps[0].invocation.busy.address - BUSY_OFFSET
            behavior_kind = demo_config.metadata.get("behaviors", {}).get(machine.machine_id, "generic")
            init_behavior_state(behavior_for(machine.machine_id, behavior_kind, base, caps),
                                oracle_state)
        shadow = ShadowModel()
        shadow.inputs[0] = oracle_state.input_registers[0]

        def drive():
            rng = random.Random(0xACCE97)
            client = TcpClient(host, port, unit_id=1)
            exception_codes = set()
            try:
                for i in range(1000):
                    pdu = _random_pdu(rng)
                    raw = client.exchange(pdu)
                    transaction, unit, response_pdu = split_adu(raw)
                    assert unit == 1
                    # byte-identical to the pure core on the same state
                    expected_adu = modbus_handle_adu(
                        build_adu(transaction, 1, pdu), oracle_state)
                    assert raw == expected_adu, f"op {i}: {pdu.hex()}"
                    # and to the independent shadow model
                    assert response_pdu == shadow.expected_response(pdu), f"op {i}: {pdu.hex()}"
                    if response_pdu[0] & 0x80:
                        exception_codes.add(response_pdu[1])
                # read-your-writes over the wire
                for _ in range(100):
                    address = rng.randrange(0, 65536)
                    value = rng.randrange(0, 65536)
                    client.request(struct.pack(">BHH", 0x06, address, value))
                    echo = client.request(struct.pack(">BHH", 0x03, address, 1))
                    assert echo == bytes([0x03, 2]) + struct.pack(">H", value)
            finally:
                client.close()
            return exception_codes

        try:
            exception_codes = await asyncio.get_running_loop().run_in_executor(None, drive)
        finally:
            await plant.stop()
        assert 0x02 in exception_codes, "no illegal-address exception was exercised"
        assert 0x03 in exception_codes, "no illegal-value exception was exercised"

    run(scenario(), timeout=60)
    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"conformance run took {elapsed:.1f}s, budget 30s"
    _passed(2, f"1000 randomized ops byte-identical, read-your-writes, exceptions 0x02/0x03 ({elapsed:.1f}s)")


# -- 3 & 4. end-to-end processes ------------------------------------------------

async def _run_steps_on_virtual_deployment(tmp_path, steps: str):
    orchestrator = Orchestrator(tmp_path)
    plant_id = orchestrator.ingest_plant(demo_plant_xml().encode())["plant_id"]
    scenario = orchestrator.create_scenario(plant_id, steps)
    result = await orchestrator.scenario_action(scenario.scenario_id, "generate")
    assert result["state"].phase == "validated"
    doc_id = orchestrator.store_process(result["state"].current_bpmn_xml, "acceptance")
    deployment = await orchestrator.deploy(plant_id, "virtual",
                                           clock_settings=ClockSettings(STEPPED))
    run_id = await orchestrator.start_run(deployment.deployment_id, doc_id)
    events = []
    async for event in orchestrator.run_events(run_id):
        events.append(event)
    await orchestrator.stop_deployment(deployment.deployment_id)
    await orchestrator.shutdown()
    return events


def test_criterion_3_process1_end_to_end(tmp_path):
    started = time.monotonic()
    events = run(_run_steps_on_virtual_deployment(tmp_path, PROCESS1_STEPS), timeout=60)
    assert events[-1]["source"] == "run" and events[-1]["outcome"] == "completed"
    dispatched = [e["detail"] for e in events
                  if e["source"] == "engine" and e["phase"] == "dispatched"]
    assert dispatched == PROCESS1_DISPATCH
    elapsed = time.monotonic() - started
    assert elapsed < 10.0, f"process 1 took {elapsed:.1f}s, budget 10s"
    _passed(3, f"process 1 completed with exact dispatch order ({elapsed:.1f}s)")


def test_criterion_4_process2_double_mill_and_drill(tmp_path):
    events = run(_run_steps_on_virtual_deployment(tmp_path, PROCESS2_STEPS), timeout=60)
    assert events[-1]["outcome"] == "completed"
    dispatched = [e["detail"] for e in events
                  if e["source"] == "engine" and e["phase"] == "dispatched"]
    mills = [d for d in dispatched if d == "indexed-line.mill-and-drill"]
    assert len(mills) == 2, dispatched
    _passed(4, "process 2 completed with MillAndDrill dispatched exactly twice")


# -- 5. scenario loop ------------------------------------------------------------

def test_criterion_5_offline_loop_and_phase_safety(tmp_path):
    async def scenario():
        orchestrator = Orchestrator(tmp_path)
        plant_id = orchestrator.ingest_plant(demo_plant_xml().encode())["plant_id"]
        state = orchestrator.create_scenario(plant_id, PROCESS1_STEPS)
        actions = 0
        for action in ("generate", "simulate", "accept"):
            result = await orchestrator.scenario_action(state.scenario_id, action)
            actions += 1
        assert actions == 3
        assert result["state"].phase == "accepted"
        assert result["state"].iteration == 1  # single generation
        await orchestrator.shutdown()

    run(scenario(), timeout=60)

    # Exhaustive depth-6 phase-machine enumeration: accepted is unreachable
    # without a completed simulation run.
    from linetwin.plantconfig import PlantConfig
    from linetwin.scenario import LoopActionError, LoopContext, advance_loop
    from linetwin.scenario.loop import ScenarioLoopState
    from linetwin.bpmn.model import RunLog

    config = PlantConfig(plant_id="p", plant_name="P")

    class ForcedBackend:
        def __init__(self, good):
            self.good = good

        async def complete(self, bundle, scenario_id):
            if self.good:
                return ('<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL">'
                        '<process id="p"><startEvent id="s"/><endEvent id="e"/>'
                        '<sequenceFlow id="f" sourceRef="s" targetRef="e"/></process></definitions>')
            return "nothing useful"

    def forced_simulator(outcome):
        async def simulate(process, xml):
            return RunLog(run_id="r", process_id="p", mode="virtual", outcome=outcome)

        return simulate

    moves = [("generate", True, None), ("generate", False, None),
             ("simulate", None, "completed"), ("simulate", None, "failed"),
             ("corrective", None, None), ("accept", None, None), ("reject", None, None)]

    async def explore():
        transitions = 0
        frontier = [ScenarioLoopState(scenario_id="s", plant_id="p", goal="g")]
        for _depth in range(6):
            next_frontier, seen = [], set()
            for state in frontier:
                for action, good, outcome in moves:
                    candidate = copy.deepcopy(state)
                    context = LoopContext(config=config, backend=ForcedBackend(good),
                                          simulator=forced_simulator(outcome or "completed"))
                    try:
                        await advance_loop(candidate, action, context,
                                           note="n" if action in ("corrective", "reject") else None)
                    except LoopActionError:
                        continue
                    transitions += 1
                    if candidate.phase == "accepted":
                        assert candidate.last_run_outcome == "completed", \
                            "reached accepted without a completed run"
                    signature = (candidate.phase, candidate.last_run_outcome,
                                 candidate.current_bpmn_xml is not None)
                    if signature not in seen:
                        seen.add(signature)
                        next_frontier.append(candidate)
            frontier = next_frontier
        return transitions

    transitions = run(explore(), timeout=120)
    assert transitions > 50
    _passed(5, f"loop accepted in 3 actions; {transitions} model-checked transitions safe")


# -- 6. virtual/physical parity ----------------------------------------------------

def test_criterion_6_virtual_physical_parity(demo_config):
    async def scenario():
        backend = TemplateOfflineBackend(demo_config)
        bundle = assemble_prompt(demo_config, PROCESS1_STEPS)
        xml = await backend.complete(bundle, "parity")
        process = parse_bpmn(xml)
        from linetwin.bpmn import validate_process
        assert validate_process(process, demo_config).is_empty()

        async def run_mode(mode: str):
            if mode == "virtual":
                config = copy.deepcopy(demo_config)
                deployment = await create_deployment(
                    config, "virtual", clock_settings=ClockSettings(STEPPED),
                    poll_interval_ms=100, record_wire=True)
            else:
                # A second emulator instance stands in for real hardware,
                # running on its own accelerated wall clock.
                hardware_config = copy.deepcopy(demo_config)
                hardware = await start_virtual_plant(
                    hardware_config, SimClock(REALTIME_SCALED, scale=10.0))
                patched = copy.deepcopy(demo_config)
                for controller in patched.controllers:
                    controller.host, controller.port = hardware.endpoints[controller.controller_id]
                deployment = await create_deployment(
                    patched, "physical", clock_settings=ClockSettings(REALTIME_SCALED, 10.0),
                    poll_interval_ms=100, record_wire=True)
            assert deployment.status == "ready"
            local_process = parse_bpmn(xml)
            validate_process(local_process, deployment.config)
            await deployment.start_run_pump()
            try:
                log = await execute(local_process, deployment.dispatcher,
                                    clock=deployment.clock, mode=mode)
            finally:
                await deployment.end_run_pump()
            taps = {cid: list(t) for cid, t in deployment.wire_taps.items()}
            await deployment.stop()
            if mode == "physical":
                await hardware.stop()
            assert log.outcome == "completed", log.stats
            return taps

        virtual_taps = await run_mode("virtual")
        physical_taps = await run_mode("physical")
        assert set(virtual_taps) == set(physical_taps)
        for controller_id in virtual_taps:
            assert virtual_taps[controller_id] == physical_taps[controller_id], (
                controller_id, virtual_taps[controller_id], physical_taps[controller_id])
        return sum(len(t) for t in virtual_taps.values())

    ops = run(scenario(), timeout=120)
    assert ops > 10
    _passed(6, f"wire sequences identical across modes ({ops} recorded operations)")


# -- 7. token semantics ---------------------------------------------------------

def test_criterion_7_token_semantics():
    from .bpmn_oracle import build_process, count_nodes, enumerate_blocks, oracle_outcomes, random_blocks
    from .test_engine import InstantDispatcher, _bind_tasks

    cases = 0
    for blocks in enumerate_blocks(4):
        if count_nodes(blocks) > 4:
            continue
        process = _bind_tasks(build_process(blocks))
        expected = oracle_outcomes(process)
        log = run(execute(process, InstantDispatcher()))
        assert log.outcome in expected, (blocks, log.outcome, expected)
        if len(expected) == 1:
            assert {log.outcome} == expected
        cases += 1
    assert cases >= 50

    rng = random.Random(0x70)
    conserved = 0
    for _ in range(500):
        blocks = random_blocks(rng, budget=10)
        n = rng.randrange(0, 4)
        process = _bind_tasks(build_process(blocks, variables={"n": "integer"}))
        expected = oracle_outcomes(process, {"n": n})
        log = run(execute(process, InstantDispatcher(), vars={"n": n}))
        assert log.outcome in expected
        if log.outcome == "completed":
            assert log.stats["tokens_created"] == log.stats["tokens_consumed"]
            assert log.stats["stuck_tokens"] == 0
            conserved += 1
    assert conserved > 100
    _passed(7, f"{cases} exhaustive small graphs match the oracle; "
               f"conservation held on {conserved} completed random graphs")


# -- 8. crash consistency ----------------------------------------------------------

def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def _wait_health(base: str, deadline_s: float = 20.0) -> None:
    start = time.monotonic()
    while time.monotonic() - start < deadline_s:
        try:
            if httpx.get(f"{base}/api/v1/health", timeout=2.0).status_code == 200:
                return
        except httpx.HTTPError:
            time.sleep(0.1)
    raise AssertionError("service did not come up in time")


def _serve(data_dir, port) -> subprocess.Popen:
    env = dict(os.environ)
    env["LINETWIN_DATA_DIR"] = str(data_dir)
    env["PYTHONUNBUFFERED"] = "1"
    return subprocess.Popen(
        [sys.executable, "-m", "linetwin.cli", "serve", "--host", "127.0.0.1",
         "--port", str(port)],
        env=env, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)


def test_criterion_8_crash_consistency(tmp_path):
    data_dir = tmp_path / "data"
    port = _free_port()
    base = f"http://127.0.0.1:{port}"
    service = _serve(data_dir, port)
    run_id = None
    try:
        _wait_health(base)
        ingest = httpx.post(f"{base}/api/v1/plants",
                            content=demo_plant_xml().encode(), timeout=10.0).json()
        plant_id = ingest["plant_id"]

        scenario = httpx.post(f"{base}/api/v1/scenarios",
                              json={"plant_id": plant_id, "goal": PROCESS1_STEPS},
                              timeout=10.0).json()
        generated = httpx.post(f"{base}/api/v1/scenarios/{scenario['scenario_id']}/generate",
                               timeout=30.0).json()
        upload = httpx.post(f"{base}/api/v1/processes", params={"name": "p1"},
                            content=generated["current_bpmn_xml"].encode(), timeout=10.0).json()

        documents_before = httpx.get(f"{base}/api/v1/documents", timeout=10.0).json()["documents"]
        bodies_before = {
            d["doc_id"]: httpx.get(f"{base}/api/v1/documents/{d['doc_id']}", timeout=10.0).content
            for d in documents_before
        }
        config_before = httpx.get(f"{base}/api/v1/plants/{plant_id}/config", timeout=10.0).content

        # Slow realtime run so the kill lands mid-flight.
        deployment = httpx.post(
            f"{base}/api/v1/plants/{plant_id}/deploy",
            json={"mode": "virtual", "clock": {"mode": "realtime_scaled", "scale": 1.0}},
            timeout=30.0).json()
        run_id = httpx.post(
            f"{base}/api/v1/deployments/{deployment['deployment_id']}/runs",
            json={"bpmn_doc_id": upload["doc_id"]}, timeout=10.0).json()["run_id"]
        deadline = time.monotonic() + 10
        while time.monotonic() < deadline:
            record = httpx.get(f"{base}/api/v1/runs/{run_id}", timeout=10.0).json()
            if record["status"] == "running":
                break
            time.sleep(0.05)
        assert record["status"] == "running"

        service.send_signal(signal.SIGKILL)
        service.wait(timeout=10)
    finally:
        if service.poll() is None:
            service.kill()
            service.wait(timeout=10)

    port2 = _free_port()
    base2 = f"http://127.0.0.1:{port2}"
    service2 = _serve(data_dir, port2)
    try:
        _wait_health(base2)
        documents_after = httpx.get(f"{base2}/api/v1/documents", timeout=10.0).json()["documents"]
        ids_after = {d["doc_id"] for d in documents_after}
        assert set(bodies_before) <= ids_after, "documents lost in the crash"
        for doc_id, body in bodies_before.items():
            assert httpx.get(f"{base2}/api/v1/documents/{doc_id}", timeout=10.0).content == body
        config_after = httpx.get(f"{base2}/api/v1/plants/{plant_id}/config", timeout=10.0).content
        assert config_after == config_before

        record = httpx.get(f"{base2}/api/v1/runs/{run_id}", timeout=10.0).json()
        assert record["status"] == "aborted"
        with httpx.stream("GET", f"{base2}/api/v1/runs/{run_id}/events", timeout=10.0) as stream:
            lines = [json.loads(line) for line in stream.iter_lines() if line]
        assert lines[-1]["outcome"] == "aborted"
    finally:
        service2.terminate()
        try:
            service2.wait(timeout=10)
        except subprocess.TimeoutExpired:
            service2.kill()
    _passed(8, "kill-and-restart preserved documents byte-for-byte and aborted the interrupted run")

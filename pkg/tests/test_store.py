"""Document store, run registry, telemetry store."""

import json

import pytest

from linetwin.adapters.events import TelemetrySample
from linetwin.orchestrator import DocumentStore, RunRegistry, TelemetryStore


def test_put_get_read_round_trip(tmp_path):
    store = DocumentStore(tmp_path)
    document = store.put("bpmn_process", b"<definitions/>", "My Process")
    assert document.doc_id.startswith("my-process-")
    assert store.get(document.doc_id).content_hash == document.content_hash
    assert store.read(document.doc_id) == b"<definitions/>"


def test_identical_bytes_same_doc_id(tmp_path):
    store = DocumentStore(tmp_path)
    first = store.put("aml_source", b"<CAEXFile/>", "plant")
    second = store.put("aml_source", b"<CAEXFile/>", "plant")
    assert first.doc_id == second.doc_id
    assert len(store.list()) == 1


def test_different_bytes_different_doc_id(tmp_path):
    store = DocumentStore(tmp_path)
    first = store.put("aml_source", b"<CAEXFile/>", "plant")
    second = store.put("aml_source", b"<CAEXFile FileName='x'/>", "plant")
    assert first.doc_id != second.doc_id


def test_store_survives_reload(tmp_path):
    store = DocumentStore(tmp_path)
    document = store.put("run_log", b'{"x": 1}', "run-7")
    reloaded = DocumentStore(tmp_path)
    assert reloaded.read(document.doc_id) == b'{"x": 1}'
    assert [d.doc_id for d in reloaded.list(kind="run_log")] == [document.doc_id]


def test_stray_tmp_file_is_harmless(tmp_path):
    store = DocumentStore(tmp_path)
    document = store.put("run_log", b"data", "r")
    # Simulate a crash mid-write: a tmp file exists, the index does not see it.
    (tmp_path / "index.json.tmp").write_bytes(b"garbage{{{")
    reloaded = DocumentStore(tmp_path)
    assert reloaded.read(document.doc_id) == b"data"


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(ValueError):
        DocumentStore(tmp_path).put("selfies", b"x", "nope")


def test_run_registry_lifecycle(tmp_path):
    registry = RunRegistry(tmp_path)
    registry.start("run-1", "dep-1", "plant-1", "doc-1")
    assert registry.get("run-1")["status"] == "running"
    registry.finish("run-1", "completed", run_log_doc_id="log-1")
    assert registry.get("run-1")["status"] == "completed"


def test_run_registry_marks_interrupted_runs_aborted(tmp_path):
    registry = RunRegistry(tmp_path)
    registry.start("run-1", "dep-1", "plant-1", "doc-1")
    registry.finish("run-1", "completed")
    registry.start("run-2", "dep-1", "plant-1", "doc-1")
    # Process dies here; a new registry on the same directory recovers.
    recovered = RunRegistry(tmp_path)
    assert recovered.get("run-1")["status"] == "completed"
    assert recovered.get("run-2")["status"] == "aborted"
    assert recovered.recovered == ["run-2"]


def test_telemetry_query_ordering_and_wildcards():
    store = TelemetryStore(capacity=100)
    store.append(TelemetrySample("plant/p/m1/busy", True, 2.0))
    store.append(TelemetrySample("plant/p/m2/busy", False, 1.0))
    store.append(TelemetrySample("plant/p/m1/done", True, 3.0))
    samples = store.query("plant/p/+/busy")
    assert [(s.topic, s.at) for s in samples] == [("plant/p/m2/busy", 1.0), ("plant/p/m1/busy", 2.0)]
    assert len(store.query("#")) == 3
    assert store.query("plant/p/m1/busy", from_s=2.5) == []


def test_telemetry_inverted_window_is_error():
    with pytest.raises(ValueError):
        TelemetryStore().query("#", from_s=5.0, to_s=1.0)


def test_telemetry_history_file(tmp_path):
    path = tmp_path / "history.ndjson"
    store = TelemetryStore(capacity=10, history_path=path)
    store.append(TelemetrySample("plant/p/m/busy", True, 1.0))
    store.append(TelemetrySample("plant/p/m/busy", False, 2.0))
    lines = [json.loads(line) for line in path.read_text().splitlines()]
    assert lines == [
        {"topic": "plant/p/m/busy", "value": True, "at": 1.0},
        {"topic": "plant/p/m/busy", "value": False, "at": 2.0},
    ]


def test_telemetry_ring_buffer_caps_capacity():
    store = TelemetryStore(capacity=5)
    for i in range(20):
        store.append(TelemetrySample("t/.../x", i, float(i)))
    samples = store.query("#")
    assert len(samples) == 5
    assert samples[0].value == 15

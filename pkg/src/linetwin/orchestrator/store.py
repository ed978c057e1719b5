"""Persistence: content-addressed documents, run registry, telemetry buffers.

Documents live as immutable blobs under objects/ keyed by their SHA-256,
with one JSON index mapping friendly slugs to hashes. Every index write
goes through write-then-rename, so a crash can never leave a half-written
index behind; an interrupted run is detected and marked aborted on boot.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from ..adapters.events import TelemetrySample
from ..adapters.bus import topic_matches
from ..plantconfig.model import slugify

DOCUMENT_KINDS = {"aml_source", "plant_config", "bpmn_process", "scenario_history", "run_log"}


def atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as handle:
        handle.write(data)
        handle.flush()
        os.fsync(handle.fileno())
    os.replace(tmp, path)


@dataclass
class StoredDocument:
    doc_id: str
    kind: str
    content_hash: str
    created_at: float
    size: int

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "kind": self.kind,
            "content_hash": self.content_hash,
            "created_at": self.created_at,
            "size": self.size,
        }


class DocumentStore:
    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir)
        self.objects_dir = self.root / "objects"
        self.objects_dir.mkdir(parents=True, exist_ok=True)
        self.index_path = self.root / "index.json"
        self._index: dict[str, dict] = {}
        if self.index_path.exists():
            self._index = json.loads(self.index_path.read_text(encoding="utf-8"))

    def _flush(self) -> None:
        atomic_write(self.index_path, json.dumps(self._index, indent=2, sort_keys=True).encode())

    def put(self, kind: str, body: bytes, name: str) -> StoredDocument:
        """Store a document; identical bytes yield the same doc_id."""
        if kind not in DOCUMENT_KINDS:
            raise ValueError(f"unknown document kind {kind!r}")
        content_hash = hashlib.sha256(body).hexdigest()
        doc_id = f"{slugify(name)}-{content_hash[:8]}"
        existing = self._index.get(doc_id)
        if existing is not None and existing["content_hash"] == content_hash:
            return self._document(doc_id)
        blob_path = self.objects_dir / content_hash
        if not blob_path.exists():
            atomic_write(blob_path, body)
        self._index[doc_id] = {
            "kind": kind,
            "content_hash": content_hash,
            "created_at": time.time(),
            "size": len(body),
        }
        self._flush()
        return self._document(doc_id)

    def _document(self, doc_id: str) -> StoredDocument:
        meta = self._index[doc_id]
        return StoredDocument(doc_id=doc_id, kind=meta["kind"], content_hash=meta["content_hash"],
                              created_at=meta["created_at"], size=meta["size"])

    def get(self, doc_id: str) -> StoredDocument | None:
        if doc_id not in self._index:
            return None
        return self._document(doc_id)

    def read(self, doc_id: str) -> bytes | None:
        document = self.get(doc_id)
        if document is None:
            return None
        blob_path = self.objects_dir / document.content_hash
        body = blob_path.read_bytes()
        if hashlib.sha256(body).hexdigest() != document.content_hash:
            raise IOError(f"document {doc_id}: content hash mismatch")
        return body

    def list(self, kind: str | None = None) -> list[StoredDocument]:
        docs = [self._document(doc_id) for doc_id in sorted(self._index)]
        if kind is not None:
            docs = [d for d in docs if d.kind == kind]
        return docs


class RunRegistry:
    """Run status journal; interrupted runs become `aborted` on reload."""

    def __init__(self, data_dir: str | Path):
        self.path = Path(data_dir) / "runs.json"
        self._runs: dict[str, dict] = {}
        self.recovered: list[str] = []
        if self.path.exists():
            self._runs = json.loads(self.path.read_text(encoding="utf-8"))
        for run_id, record in self._runs.items():
            if record.get("status") == "running":
                record["status"] = "aborted"
                record["detail"] = "interrupted by restart"
                self.recovered.append(run_id)
        if self.recovered:
            self._flush()

    def _flush(self) -> None:
        atomic_write(self.path, json.dumps(self._runs, indent=2, sort_keys=True).encode())

    def start(self, run_id: str, deployment_id: str, plant_id: str, process_doc_id: str) -> None:
        self._runs[run_id] = {
            "run_id": run_id,
            "deployment_id": deployment_id,
            "plant_id": plant_id,
            "process_doc_id": process_doc_id,
            "status": "running",
            "started_at": time.time(),
        }
        self._flush()

    def finish(self, run_id: str, status: str, run_log_doc_id: str | None = None,
               detail: str = "") -> None:
        record = self._runs.get(run_id)
        if record is None:
            return
        record["status"] = status
        if run_log_doc_id:
            record["run_log_doc_id"] = run_log_doc_id
        if detail:
            record["detail"] = detail
        record["finished_at"] = time.time()
        self._flush()

    def get(self, run_id: str) -> dict | None:
        record = self._runs.get(run_id)
        return dict(record) if record else None

    def list(self) -> list[dict]:
        return [dict(r) for r in self._runs.values()]


class TelemetryStore:
    """Per-topic ring buffers plus an optional append-only history file."""

    def __init__(self, capacity: int = 10_000, history_path: str | Path | None = None):
        self.capacity = capacity
        self._buffers: dict[str, deque] = {}
        self.history_path = Path(history_path) if history_path else None
        if self.history_path is not None:
            self.history_path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, sample: TelemetrySample) -> None:
        buffer = self._buffers.setdefault(sample.topic, deque(maxlen=self.capacity))
        buffer.append(sample)
        if self.history_path is not None:
            with open(self.history_path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(sample.to_dict()) + "\n")

    def query(self, topic_filter: str = "#", from_s: float | None = None,
              to_s: float | None = None) -> list[TelemetrySample]:
        if from_s is not None and to_s is not None and from_s > to_s:
            raise ValueError("query window is inverted: from > to")
        out: list[TelemetrySample] = []
        for topic, buffer in self._buffers.items():
            if not topic_matches(topic_filter, topic):
                continue
            for sample in buffer:
                if from_s is not None and sample.at < from_s:
                    continue
                if to_s is not None and sample.at > to_s:
                    continue
                out.append(sample)
        out.sort(key=lambda s: (s.at, s.topic))
        return out

    def topics(self) -> list[str]:
        return sorted(self._buffers)

from .core import Orchestrator, OrchestratorError, RunHandle, RunStream
from .deployment import (
    ClockSettings,
    Deployment,
    DeploymentDispatcher,
    DeploymentError,
    create_deployment,
)
from .store import DocumentStore, RunRegistry, StoredDocument, TelemetryStore, atomic_write

__all__ = [
    "ClockSettings",
    "Deployment",
    "DeploymentDispatcher",
    "DeploymentError",
    "DocumentStore",
    "Orchestrator",
    "OrchestratorError",
    "RunHandle",
    "RunRegistry",
    "RunStream",
    "StoredDocument",
    "TelemetryStore",
    "atomic_write",
    "create_deployment",
]

"""Service configuration: one JSON file plus LINETWIN_* environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..plantconfig import PlantConfig, RoleMapping
from ..scenario import RemoteHttpBackend, ReplayFixtureBackend, TemplateOfflineBackend


@dataclass
class LlmSettings:
    kind: str = "template_offline"  # template_offline | replay_fixture | remote_http
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "LINETWIN_LLM_API_KEY"
    replay_path: str = ""


@dataclass
class ServiceConfig:
    data_dir: str = "./linetwin-data"
    host: str = "127.0.0.1"
    port: int = 8400
    role_mapping_path: str = ""
    llm: LlmSettings = field(default_factory=LlmSettings)
    telemetry_history: bool = False
    telemetry_capacity: int = 10_000
    poll_interval_ms: int = 100
    ui_dir: str = ""
    mqtt_bridge_url: str = ""

    def backend_factory(self):
        settings = self.llm
        if settings.kind == "template_offline":
            return lambda config: TemplateOfflineBackend(config)
        if settings.kind == "replay_fixture":
            if not settings.replay_path:
                raise ValueError("llm.replay_path is required for the replay_fixture backend")
            return lambda config: ReplayFixtureBackend(settings.replay_path)
        if settings.kind == "remote_http":
            if not settings.endpoint or not settings.model:
                raise ValueError("llm.endpoint and llm.model are required for the remote_http backend")
            return lambda config: RemoteHttpBackend(
                settings.endpoint, settings.model, settings.api_key_env)
        raise ValueError(f"unknown llm backend kind {settings.kind!r}")

    def role_mapping(self) -> RoleMapping:
        if self.role_mapping_path:
            return RoleMapping.load(self.role_mapping_path)
        return RoleMapping.default()


_ENV_OVERRIDES = {
    "LINETWIN_DATA_DIR": ("data_dir", str),
    "LINETWIN_HOST": ("host", str),
    "LINETWIN_PORT": ("port", int),
    "LINETWIN_ROLE_MAPPING": ("role_mapping_path", str),
    "LINETWIN_TELEMETRY_HISTORY": ("telemetry_history", lambda v: v.lower() in ("1", "true", "yes")),
    "LINETWIN_POLL_INTERVAL_MS": ("poll_interval_ms", int),
    "LINETWIN_UI_DIR": ("ui_dir", str),
    "LINETWIN_LLM_KIND": ("llm.kind", str),
    "LINETWIN_LLM_ENDPOINT": ("llm.endpoint", str),
    "LINETWIN_LLM_MODEL": ("llm.model", str),
    "LINETWIN_LLM_REPLAY_PATH": ("llm.replay_path", str),
}


def load_config(path: str | Path | None = None, env: dict | None = None) -> ServiceConfig:
    env = os.environ if env is None else env
    config = ServiceConfig()
    if path:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        llm_data = data.pop("llm", {})
        for key, value in data.items():
            if hasattr(config, key):
                setattr(config, key, value)
        for key, value in llm_data.items():
            if hasattr(config.llm, key):
                setattr(config.llm, key, value)
    for env_name, (target, cast) in _ENV_OVERRIDES.items():
        if env_name not in env:
            continue
        value = cast(env[env_name])
        if target.startswith("llm."):
            setattr(config.llm, target[4:], value)
        else:
            setattr(config, target, value)
    return config

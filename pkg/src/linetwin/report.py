"""Validation findings shared by the AML, extraction, and BPMN layers."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning"
    element_path: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.element_path}: {self.message}"


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    def add(self, severity: str, element_path: str, message: str) -> None:
        self.findings.append(Finding(severity, element_path, message))

    def error(self, element_path: str, message: str) -> None:
        self.add("error", element_path, message)

    def warning(self, element_path: str, message: str) -> None:
        self.add("warning", element_path, message)

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "error"]

    @property
    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "warning"]

    def is_empty(self) -> bool:
        return not self.findings

    def has_errors(self) -> bool:
        return bool(self.errors)

    def extend(self, other: "ValidationReport") -> None:
        self.findings.extend(other.findings)

    def messages(self) -> list[str]:
        return [str(f) for f in self.findings]

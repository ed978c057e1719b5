"""Pull the BPMN XML region out of a raw model response."""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET

_FENCE_RE = re.compile(r"```[a-zA-Z0-9_-]*\n(.*?)```", re.DOTALL)
_START_MARKERS = ("<?xml", "<definitions", "<bpmn:definitions", "<bpmn2:definitions", "<process")
_CLOSE_RE = re.compile(r"</\s*(?:[A-Za-z0-9_]+:)?(?:definitions|process)\s*>")


class BpmnExtractionError(Exception):
    pass


def _is_bpmn_root(text: str) -> bool:
    try:
        root = ET.fromstring(text)
    except (ET.ParseError, ValueError):
        return False
    local = root.tag.rpartition("}")[2] if isinstance(root.tag, str) else ""
    return local in ("definitions", "process")


def extract_bpmn_xml(raw: str) -> str:
    """First region of the response that parses as a BPMN document.

    Searches fenced code blocks first, then the span from the first XML
    start marker to the last matching definitions/process close tag.
    """
    for match in _FENCE_RE.finditer(raw):
        candidate = match.group(1).strip()
        if _is_bpmn_root(candidate):
            return candidate

    starts = [raw.find(marker) for marker in _START_MARKERS]
    starts = [index for index in starts if index != -1]
    if starts:
        start = min(starts)
        closes = list(_CLOSE_RE.finditer(raw, start))
        for close in reversed(closes):
            candidate = raw[start:close.end()].strip()
            if _is_bpmn_root(candidate):
                return candidate

    raise BpmnExtractionError("no BPMN XML region found in the response")

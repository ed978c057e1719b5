"""In-process publish/subscribe bus for lifecycle events and telemetry.

Topic filters use MQTT-compatible semantics per path segment: `+` (or `*`)
matches one segment, `#` at the end matches the rest, and shell-style
globs like `punch*` work within a segment.
"""

from __future__ import annotations

import asyncio
from fnmatch import fnmatchcase

from .events import RunEvent, TelemetrySample


def topic_matches(pattern: str, topic: str) -> bool:
    pattern_parts = pattern.split("/")
    topic_parts = topic.split("/")
    for i, part in enumerate(pattern_parts):
        if part == "#":
            return i == len(pattern_parts) - 1
        if i >= len(topic_parts):
            return False
        segment = "*" if part == "+" else part
        if not fnmatchcase(topic_parts[i], segment):
            return False
    return len(pattern_parts) == len(topic_parts)


class EventBus:
    """Fan-out of RunEvents and TelemetrySamples to asyncio subscribers."""

    def __init__(self):
        self._event_queues: list[asyncio.Queue] = []
        self._telemetry_queues: list[tuple[str | None, asyncio.Queue]] = []
        self._event_listeners: list = []
        self._telemetry_listeners: list = []

    def publish_event(self, event: RunEvent) -> None:
        for queue in self._event_queues:
            queue.put_nowait(event)
        for listener in self._event_listeners:
            listener(event)

    def publish_telemetry(self, sample: TelemetrySample) -> None:
        for pattern, queue in self._telemetry_queues:
            if pattern is None or topic_matches(pattern, sample.topic):
                queue.put_nowait(sample)
        for listener in self._telemetry_listeners:
            listener(sample)

    def subscribe_events(self) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue()
        self._event_queues.append(queue)
        return queue

    def unsubscribe_events(self, queue: asyncio.Queue) -> None:
        if queue in self._event_queues:
            self._event_queues.remove(queue)

    def subscribe_telemetry(self, pattern: str | None = None) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue()
        self._telemetry_queues.append((pattern, queue))
        return queue

    def unsubscribe_telemetry(self, queue: asyncio.Queue) -> None:
        self._telemetry_queues = [(p, q) for p, q in self._telemetry_queues if q is not queue]

    def add_event_listener(self, listener) -> None:
        """Synchronous callback for persistence hooks."""
        self._event_listeners.append(listener)

    def add_telemetry_listener(self, listener) -> None:
        self._telemetry_listeners.append(listener)

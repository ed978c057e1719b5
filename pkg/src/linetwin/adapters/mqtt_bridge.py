"""Optional MQTT bridge: republish bus telemetry to an external broker.

Implements just enough of MQTT 3.1.1 for a QoS-0 publisher: CONNECT /
CONNACK / PUBLISH / DISCONNECT. Payloads are `{"ts": <epoch-ms>,
"value": <v>}` on the same topics the internal bus uses.
"""

from __future__ import annotations

import asyncio
import json
import logging
import time

from .bus import EventBus
from .events import TelemetrySample

log = logging.getLogger(__name__)

CONNECT = 0x10
CONNACK = 0x20
PUBLISH = 0x30
DISCONNECT = 0xE0


def encode_remaining_length(n: int) -> bytes:
    out = bytearray()
    while True:
        digit = n % 128
        n //= 128
        if n:
            digit |= 0x80
        out.append(digit)
        if not n:
            return bytes(out)


def _utf8_field(text: str) -> bytes:
    data = text.encode("utf-8")
    return len(data).to_bytes(2, "big") + data


def connect_packet(client_id: str, keepalive_s: int = 60) -> bytes:
    variable = _utf8_field("MQTT") + bytes([0x04, 0x02]) + keepalive_s.to_bytes(2, "big")
    payload = _utf8_field(client_id)
    body = variable + payload
    return bytes([CONNECT]) + encode_remaining_length(len(body)) + body


def publish_packet(topic: str, payload: bytes) -> bytes:
    body = _utf8_field(topic) + payload
    return bytes([PUBLISH]) + encode_remaining_length(len(body)) + body


def disconnect_packet() -> bytes:
    return bytes([DISCONNECT, 0x00])


async def read_packet(reader: asyncio.StreamReader) -> tuple[int, bytes]:
    """Read one MQTT control packet; returns (packet type byte, body)."""
    first = await reader.readexactly(1)
    remaining = 0
    multiplier = 1
    for _ in range(4):
        byte = (await reader.readexactly(1))[0]
        remaining += (byte & 0x7F) * multiplier
        if not byte & 0x80:
            break
        multiplier *= 128
    body = await reader.readexactly(remaining) if remaining else b""
    return first[0] & 0xF0, body


class MqttBridge:
    """Fire-and-forget republisher with reconnect-and-drop semantics."""

    def __init__(self, host: str, port: int, client_id: str = "linetwin-bridge",
                 queue_limit: int = 10_000):
        self.host = host
        self.port = port
        self.client_id = client_id
        self._queue: asyncio.Queue = asyncio.Queue(maxsize=queue_limit)
        self._task: asyncio.Task | None = None
        self.published = 0

    def attach(self, bus: EventBus) -> None:
        bus.add_telemetry_listener(self._enqueue)

    def _enqueue(self, sample: TelemetrySample) -> None:
        if self._task is None or self._task.done():
            self._task = asyncio.get_running_loop().create_task(self._pump())
        try:
            self._queue.put_nowait(sample)
        except asyncio.QueueFull:
            log.warning("mqtt bridge queue full; dropping sample for %s", sample.topic)

    async def _pump(self) -> None:
        backoff = 0.5
        writer = None
        while True:
            sample = await self._queue.get()
            while True:
                try:
                    if writer is None:
                        writer = await self._connect()
                        backoff = 0.5
                    payload = json.dumps(
                        {"ts": int(time.time() * 1000), "value": sample.value}).encode()
                    writer.write(publish_packet(sample.topic, payload))
                    await writer.drain()
                    self.published += 1
                    break
                except (OSError, asyncio.IncompleteReadError) as exc:
                    log.warning("mqtt bridge: %s; reconnecting in %.1fs", exc, backoff)
                    if writer is not None:
                        writer.close()
                        writer = None
                    await asyncio.sleep(backoff)
                    backoff = min(backoff * 2, 30.0)

    async def _connect(self) -> asyncio.StreamWriter:
        reader, writer = await asyncio.open_connection(self.host, self.port)
        writer.write(connect_packet(self.client_id))
        await writer.drain()
        packet_type, body = await read_packet(reader)
        if packet_type != CONNACK or len(body) < 2 or body[1] != 0:
            writer.close()
            raise OSError(f"broker refused connection (type={packet_type:#x}, body={body.hex()})")
        return writer

    async def close(self) -> None:
        if self._task is not None:
            self._task.cancel()
            try:
                await self._task
            except asyncio.CancelledError:
                pass
            self._task = None

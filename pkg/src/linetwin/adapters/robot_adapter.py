"""Robot gateway adapter: async command dispatch over newline-JSON TCP.

One reader task routes the line stream: request replies (accepted /
rejected / status_reply) answer the oldest pending request in order,
`event` lines resolve the matching command.
"""

from __future__ import annotations

import asyncio
import json
import logging
from collections import deque

from ..plantconfig.model import CapabilityDescriptor, RobotInvocation
from .base import SNAPSHOT_EVERY_N_POLLS, Adapter
from .events import CommandEnvelope, TelemetrySample, telemetry_topic

log = logging.getLogger(__name__)

REPLY_TYPES = {"accepted", "rejected", "status_reply"}


class RobotAdapter(Adapter):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._reader: asyncio.StreamReader | None = None
        self._writer: asyncio.StreamWriter | None = None
        self._reader_task: asyncio.Task | None = None
        self._pending_replies: deque[asyncio.Future] = deque()
        self._request_lock = asyncio.Lock()
        self._completions: dict[str, asyncio.Future] = {}
        self._last_values: dict[str, bool | int] = {}
        self._poll_count = 0

    async def _connect(self) -> None:
        host, port = self.spec.endpoint
        self._reader, self._writer = await asyncio.open_connection(host, port)
        self._reader_task = asyncio.create_task(self._read_stream())

    async def _disconnect(self) -> None:
        if self._reader_task is not None:
            self._reader_task.cancel()
            try:
                await self._reader_task
            except asyncio.CancelledError:
                pass
        if self._writer is not None:
            self._writer.close()
            self._writer = None

    async def _read_stream(self) -> None:
        assert self._reader is not None
        try:
            while True:
                line = await self._reader.readline()
                if not line:
                    break
                try:
                    msg = json.loads(line)
                except json.JSONDecodeError:
                    log.warning("robot %s: unparseable line %r", self.spec.adapter_id, line)
                    continue
                if msg.get("type") in REPLY_TYPES:
                    # Replies pair with requests in send order; a slot whose
                    # requester gave up still consumes its reply.
                    if self._pending_replies:
                        future = self._pending_replies.popleft()
                        if not future.done():
                            future.set_result(msg)
                elif msg.get("type") == "event":
                    future = self._completions.get(msg.get("command_id", ""))
                    if future is not None and not future.done():
                        future.set_result(msg)
        except asyncio.CancelledError:
            raise
        except ConnectionError:
            pass

    async def _roundtrip(self, msg: dict) -> dict:
        if self._writer is None:
            raise ConnectionError("adapter is not connected")
        async with self._request_lock:
            future: asyncio.Future = asyncio.get_running_loop().create_future()
            self._pending_replies.append(future)
            try:
                self._writer.write(json.dumps(msg).encode() + b"\n")
                await self._writer.drain()
            except Exception:
                self._pending_replies.remove(future)
                raise
            return await future

    async def _run_handshake(self, cmd: CommandEnvelope, capability: CapabilityDescriptor) -> None:
        invocation = capability.invocation
        assert isinstance(invocation, RobotInvocation)
        params = {name: cmd.params[name] for name in invocation.param_names if name in cmd.params}
        self.tap("robot", "cmd", invocation.command, tuple(sorted(params.items())))
        completion: asyncio.Future = asyncio.get_running_loop().create_future()
        try:
            reply = await self._roundtrip(
                {"type": "cmd", "command": invocation.command, "params": params})
            if reply.get("type") != "accepted":
                self._finish(cmd, capability, "failed",
                             f"gateway rejected: {reply.get('reason', 'unknown')}")
                return
            gateway_command_id = reply["command_id"]
            self._completions[gateway_command_id] = completion
            self.emit(cmd.command_id, "started", capability.capability_id)

            remaining = max(0.0, cmd.timeout_s - (self.clock.now_s - cmd.issued_at))
            try:
                event = await self._wait_with_sim_timeout(completion, cmd.issued_at + cmd.timeout_s)
            finally:
                self._completions.pop(gateway_command_id, None)
            if event is None:
                self._finish(cmd, capability, "timeout",
                             f"no completion within {cmd.timeout_s}s (remaining budget {remaining:.3f}s)")
                return
            self.tap("robot", "completed", event.get("position", ""))
            self._finish(cmd, capability, "completed", f"position={event.get('position', '')}")
        except (ConnectionError, asyncio.IncompleteReadError) as exc:
            self._finish(cmd, capability, "failed", f"wire error: {exc}")

    async def _wait_with_sim_timeout(self, future: asyncio.Future, deadline_s: float) -> dict | None:
        """Await a completion but give up once sim time passes the deadline."""
        while True:
            if future.done():
                return future.result()
            if self.clock.now_s >= deadline_s:
                return None
            waiter = asyncio.ensure_future(self.clock.sleep(0.05))
            done, _ = await asyncio.wait({future, waiter}, return_when=asyncio.FIRST_COMPLETED)
            if waiter not in done:
                waiter.cancel()
                try:
                    await waiter
                except asyncio.CancelledError:
                    pass

    # -- telemetry -----------------------------------------------------------

    async def _poll_loop(self) -> None:
        interval = self.spec.poll_interval_ms / 1000.0
        backoff = interval
        while not self._stopped:
            try:
                samples = await self.sample_signals()
                backoff = interval
                for sample in samples:
                    self.bus.publish_telemetry(sample)
            except (ConnectionError, asyncio.IncompleteReadError) as exc:
                self.emit(None, "failed", f"telemetry poll failed: {exc}")
                backoff = min(backoff * 2, 5.0)
            except asyncio.CancelledError:
                raise
            await self.clock.sleep(backoff)

    async def sample_signals(self) -> list[TelemetrySample]:
        """Gateway machines report busy state through status polls."""
        self._poll_count += 1
        snapshot = self._poll_count % SNAPSHOT_EVERY_N_POLLS == 1
        reply = await self._roundtrip({"type": "status"})
        busy = reply.get("phase") == "busy"
        now = self.clock.now_s
        samples = []
        for machine in self.spec.machines:
            topic = telemetry_topic(self.spec.plant_id, machine.machine_id, "busy")
            if snapshot or self._last_values.get(topic) != busy:
                samples.append(TelemetrySample(topic=topic, value=busy, at=now))
            self._last_values[topic] = busy
        return samples

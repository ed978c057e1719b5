"""Modbus TCP adapter: capability handshakes and register polling.

Handshake per command: write param registers, raise the trigger coil, watch
busy rise (started), watch done rise, drop the trigger (completed). Polls
and handshake requests share one connection, serialized by a lock.
"""

from __future__ import annotations

import asyncio
import logging
import struct

from ..plantconfig.model import CapabilityDescriptor, ModbusInvocation
from .base import SNAPSHOT_EVERY_N_POLLS, Adapter
from .events import CommandEnvelope, TelemetrySample, telemetry_topic

log = logging.getLogger(__name__)

HANDSHAKE_POLL_S = 0.05
REARM_GRACE_S = 5.0
READ_FUNCTION = {
    "coil": 0x01,
    "discrete_input": 0x02,
    "holding_register": 0x03,
    "input_register": 0x04,
}


class ModbusAdapter(Adapter):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._reader: asyncio.StreamReader | None = None
        self._writer: asyncio.StreamWriter | None = None
        self._io_lock = asyncio.Lock()
        self._transaction = 0
        self._last_values: dict[str, bool | int] = {}
        self._poll_count = 0

    async def _connect(self) -> None:
        host, port = self.spec.endpoint
        self._reader, self._writer = await asyncio.open_connection(host, port)

    async def _disconnect(self) -> None:
        if self._writer is not None:
            self._writer.close()
            self._writer = None

    async def _request(self, pdu: bytes) -> bytes:
        if self._writer is None or self._reader is None:
            raise ConnectionError("adapter is not connected")
        async with self._io_lock:
            self._transaction = (self._transaction + 1) & 0xFFFF
            unit = self.spec.controller.protocol_params.get("unit_id", 1)
            adu = struct.pack(">HHHB", self._transaction, 0, len(pdu) + 1, unit) + pdu
            self._writer.write(adu)
            await self._writer.drain()
            header = await self._reader.readexactly(7)
            length = int.from_bytes(header[4:6], "big")
            body = await self._reader.readexactly(length - 1)
        if header[:2] != adu[:2]:
            raise ConnectionError("transaction id mismatch")
        if body[0] & 0x80:
            raise ModbusExceptionResponse(body[0] & 0x7F, body[1])
        return body

    async def _read_bit(self, table: str, address: int) -> bool:
        pdu = struct.pack(">BHH", READ_FUNCTION[table], address, 1)
        response = await self._request(pdu)
        return bool(response[2] & 1)

    async def _read_span(self, table: str, address: int, quantity: int) -> list[int]:
        pdu = struct.pack(">BHH", READ_FUNCTION[table], address, quantity)
        response = await self._request(pdu)
        if table in ("coil", "discrete_input"):
            return [(response[2 + i // 8] >> (i % 8)) & 1 for i in range(quantity)]
        return [int.from_bytes(response[2 + 2 * i:4 + 2 * i], "big") for i in range(quantity)]

    async def _write_coil(self, address: int, on: bool) -> None:
        self.tap("modbus", "write_coil", address, on)
        await self._request(struct.pack(">BHH", 0x05, address, 0xFF00 if on else 0x0000))

    async def _write_registers(self, address: int, values: list[int]) -> None:
        self.tap("modbus", "write_registers", address, tuple(values))
        payload = b"".join(struct.pack(">H", v & 0xFFFF) for v in values)
        pdu = struct.pack(">BHHB", 0x10, address, len(values), len(payload)) + payload
        await self._request(pdu)

    # -- handshake -----------------------------------------------------------

    async def _run_handshake(self, cmd: CommandEnvelope, capability: CapabilityDescriptor) -> None:
        invocation = capability.invocation
        assert isinstance(invocation, ModbusInvocation)
        deadline = self.clock.now_s + cmd.timeout_s
        try:
            if invocation.param_registers:
                values = self._encode_params(capability, cmd.params)
                await self._write_registers(invocation.param_registers[0].address, values)
            await self._write_coil(invocation.trigger.address, True)

            if not await self._wait_bit(invocation.busy.address, deadline):
                await self._write_coil(invocation.trigger.address, False)
                self._finish(cmd, capability, "timeout", "busy never rose")
                return
            self.tap("modbus", "rise", "busy", invocation.busy.address)
            self.emit(cmd.command_id, "started", capability.capability_id)

            if not await self._wait_bit(invocation.done.address, deadline):
                await self._write_coil(invocation.trigger.address, False)
                self._finish(cmd, capability, "timeout", "done never rose")
                return
            self.tap("modbus", "rise", "done", invocation.done.address)
            await self._write_coil(invocation.trigger.address, False)
            # Re-arm: the PLC drops done once it sees the trigger low; only
            # then may the next command raise a trigger on this machine.
            await self._wait_bit_clear(invocation.done.address,
                                       self.clock.now_s + REARM_GRACE_S)
            self._finish(cmd, capability, "completed", capability.capability_id)
        except (ConnectionError, ModbusExceptionResponse, asyncio.IncompleteReadError) as exc:
            self._finish(cmd, capability, "failed", f"wire error: {exc}")

    async def _wait_bit(self, address: int, deadline: float) -> bool:
        while True:
            if await self._read_bit("discrete_input", address):
                return True
            if self.clock.now_s >= deadline:
                return False
            await self.clock.sleep(HANDSHAKE_POLL_S)

    async def _wait_bit_clear(self, address: int, deadline: float) -> bool:
        while True:
            if not await self._read_bit("discrete_input", address):
                return True
            if self.clock.now_s >= deadline:
                return False
            await self.clock.sleep(HANDSHAKE_POLL_S)

    def _encode_params(self, capability: CapabilityDescriptor, params: dict) -> list[int]:
        values = []
        for param in capability.params:
            value = params.get(param.name, 0)
            if isinstance(value, bool):
                value = int(value)
            values.append(int(value) & 0xFFFF)
        return values

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
            except (ConnectionError, ModbusExceptionResponse, asyncio.IncompleteReadError) as exc:
                self.emit(None, "failed", f"telemetry poll failed: {exc}")
                backoff = min(backoff * 2, 5.0)
            except asyncio.CancelledError:
                raise
            await self.clock.sleep(backoff)

    async def sample_signals(self) -> list[TelemetrySample]:
        """One poll cycle: batched reads per table, change-driven samples."""
        self._poll_count += 1
        snapshot = self._poll_count % SNAPSHOT_EVERY_N_POLLS == 1
        bindings = []  # (machine, signal)
        for machine in self.spec.machines:
            for signal in machine.signals:
                bindings.append((machine, signal))
        by_table: dict[str, list] = {}
        for machine, signal in bindings:
            by_table.setdefault(signal.binding.table, []).append((machine, signal))

        samples: list[TelemetrySample] = []
        now = self.clock.now_s
        for table, entries in by_table.items():
            low = min(signal.binding.address for _, signal in entries)
            high = max(signal.binding.address for _, signal in entries)
            span = await self._read_span(table, low, high - low + 1)
            for machine, signal in entries:
                raw = span[signal.binding.address - low]
                value: bool | int = bool(raw) if signal.data_kind == "boolean" else int(raw)
                topic = telemetry_topic(self.spec.plant_id, machine.machine_id, signal.name)
                if snapshot or self._last_values.get(topic) != value:
                    samples.append(TelemetrySample(topic=topic, value=value, at=now))
                self._last_values[topic] = value
        return samples


class ModbusExceptionResponse(Exception):
    def __init__(self, function: int, code: int):
        super().__init__(f"modbus exception {code:#04x} for function {function:#04x}")
        self.function = function
        self.code = code

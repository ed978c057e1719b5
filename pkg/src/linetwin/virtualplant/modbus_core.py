"""Pure Modbus TCP (MBAP) request handling over an in-memory PLC state.

Implements function codes 0x01-0x06, 0x0F and 0x10 with the quantity and
address checks of the published Modbus application protocol. The handler is
a pure function of (request bytes, state); the TCP server in plant.py is a
thin shell around it.
"""

from __future__ import annotations

import struct
from array import array
from dataclasses import dataclass, field

READ_COILS = 0x01
READ_DISCRETE_INPUTS = 0x02
READ_HOLDING_REGISTERS = 0x03
READ_INPUT_REGISTERS = 0x04
WRITE_SINGLE_COIL = 0x05
WRITE_SINGLE_REGISTER = 0x06
WRITE_MULTIPLE_COILS = 0x0F
WRITE_MULTIPLE_REGISTERS = 0x10

EXC_ILLEGAL_FUNCTION = 0x01
EXC_ILLEGAL_DATA_ADDRESS = 0x02
EXC_ILLEGAL_DATA_VALUE = 0x03

TABLE_SIZE = 65536


class ModbusFrameError(Exception):
    """Short or garbled frame; the connection should be closed."""


@dataclass
class PlcState:
    unit_id: int = 1
    coils: bytearray = field(default_factory=lambda: bytearray(TABLE_SIZE))
    discrete_inputs: bytearray = field(default_factory=lambda: bytearray(TABLE_SIZE))
    holding_registers: array = field(default_factory=lambda: array("H", bytes(2 * TABLE_SIZE)))
    input_registers: array = field(default_factory=lambda: array("H", bytes(2 * TABLE_SIZE)))

    def snapshot(self) -> "PlcState":
        return PlcState(
            unit_id=self.unit_id,
            coils=bytearray(self.coils),
            discrete_inputs=bytearray(self.discrete_inputs),
            holding_registers=array("H", self.holding_registers),
            input_registers=array("H", self.input_registers),
        )


def _exception_pdu(function: int, code: int) -> bytes:
    return bytes([function | 0x80, code])


def _pack_bits(bits: list[int]) -> bytes:
    out = bytearray((len(bits) + 7) // 8)
    for i, bit in enumerate(bits):
        if bit:
            out[i // 8] |= 1 << (i % 8)
    return bytes(out)


def handle_pdu(pdu: bytes, state: PlcState) -> bytes:
    """Apply one Modbus PDU to the state and build the response PDU.

    Raises ModbusFrameError when the PDU does not match its function code's
    grammar (a garbled frame, distinct from a protocol exception).
    """
    if len(pdu) < 1:
        raise ModbusFrameError("empty PDU")
    function = pdu[0]

    if function in (READ_COILS, READ_DISCRETE_INPUTS):
        if len(pdu) != 5:
            raise ModbusFrameError(f"function {function:#04x}: bad PDU length {len(pdu)}")
        address, quantity = struct.unpack(">HH", pdu[1:5])
        if not 1 <= quantity <= 2000:
            return _exception_pdu(function, EXC_ILLEGAL_DATA_VALUE)
        if address + quantity > TABLE_SIZE:
            return _exception_pdu(function, EXC_ILLEGAL_DATA_ADDRESS)
        table = state.coils if function == READ_COILS else state.discrete_inputs
        data = _pack_bits([table[address + i] for i in range(quantity)])
        return bytes([function, len(data)]) + data

    if function in (READ_HOLDING_REGISTERS, READ_INPUT_REGISTERS):
        if len(pdu) != 5:
            raise ModbusFrameError(f"function {function:#04x}: bad PDU length {len(pdu)}")
        address, quantity = struct.unpack(">HH", pdu[1:5])
        if not 1 <= quantity <= 125:
            return _exception_pdu(function, EXC_ILLEGAL_DATA_VALUE)
        if address + quantity > TABLE_SIZE:
            return _exception_pdu(function, EXC_ILLEGAL_DATA_ADDRESS)
        table = state.holding_registers if function == READ_HOLDING_REGISTERS else state.input_registers
        data = b"".join(struct.pack(">H", table[address + i]) for i in range(quantity))
        return bytes([function, len(data)]) + data

    if function == WRITE_SINGLE_COIL:
        if len(pdu) != 5:
            raise ModbusFrameError("write single coil: bad PDU length")
        address, value = struct.unpack(">HH", pdu[1:5])
        if value not in (0x0000, 0xFF00):
            return _exception_pdu(function, EXC_ILLEGAL_DATA_VALUE)
        state.coils[address] = 1 if value == 0xFF00 else 0
        return pdu

    if function == WRITE_SINGLE_REGISTER:
        if len(pdu) != 5:
            raise ModbusFrameError("write single register: bad PDU length")
        address, value = struct.unpack(">HH", pdu[1:5])
        state.holding_registers[address] = value
        return pdu

    if function == WRITE_MULTIPLE_COILS:
        if len(pdu) < 6:
            raise ModbusFrameError("write multiple coils: short PDU")
        address, quantity, byte_count = struct.unpack(">HHB", pdu[1:6])
        data = pdu[6:]
        if len(data) != byte_count:
            raise ModbusFrameError("write multiple coils: byte count does not match payload")
        if not 1 <= quantity <= 1968 or byte_count != (quantity + 7) // 8:
            return _exception_pdu(function, EXC_ILLEGAL_DATA_VALUE)
        if address + quantity > TABLE_SIZE:
            return _exception_pdu(function, EXC_ILLEGAL_DATA_ADDRESS)
        for i in range(quantity):
            state.coils[address + i] = (data[i // 8] >> (i % 8)) & 1
        return pdu[:5]

    if function == WRITE_MULTIPLE_REGISTERS:
        if len(pdu) < 6:
            raise ModbusFrameError("write multiple registers: short PDU")
        address, quantity, byte_count = struct.unpack(">HHB", pdu[1:6])
        data = pdu[6:]
        if len(data) != byte_count:
            raise ModbusFrameError("write multiple registers: byte count does not match payload")
        if not 1 <= quantity <= 123 or byte_count != 2 * quantity:
            return _exception_pdu(function, EXC_ILLEGAL_DATA_VALUE)
        if address + quantity > TABLE_SIZE:
            return _exception_pdu(function, EXC_ILLEGAL_DATA_ADDRESS)
        for i in range(quantity):
            state.holding_registers[address + i] = struct.unpack(">H", data[2 * i:2 * i + 2])[0]
        return pdu[:5]

    return _exception_pdu(function, EXC_ILLEGAL_FUNCTION)


def modbus_handle_adu(request: bytes, state: PlcState) -> bytes:
    """Handle one MBAP-framed ADU (7-byte header + PDU), mutating the state.

    The response echoes transaction and unit id. Raises ModbusFrameError on
    framing violations; the caller closes the connection in that case.
    """
    if len(request) < 8:
        raise ModbusFrameError(f"ADU too short ({len(request)} bytes)")
    transaction_id, protocol_id, length, unit_id = struct.unpack(">HHHB", request[:7])
    if protocol_id != 0:
        raise ModbusFrameError(f"unsupported protocol id {protocol_id}")
    if length != len(request) - 6:
        raise ModbusFrameError(f"MBAP length {length} does not match frame size {len(request) - 6}")
    response_pdu = handle_pdu(request[7:], state)
    header = struct.pack(">HHHB", transaction_id, 0, len(response_pdu) + 1, unit_id)
    return header + response_pdu

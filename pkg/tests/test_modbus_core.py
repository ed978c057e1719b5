"""Pure Modbus core conformance against the independent shadow model."""

import random
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linetwin.virtualplant import ModbusFrameError, PlcState, handle_pdu, modbus_handle_adu

from .modbus_ref import (
    ShadowModel,
    build_adu,
    read_request,
    split_adu,
    write_multiple_coils,
    write_multiple_registers,
    write_single_coil,
    write_single_register,
)


def test_write_coil_then_read_it_back():
    state = PlcState()
    response = handle_pdu(bytes.fromhex("05 00 13 FF 00".replace(" ", "")), state)
    assert response == bytes.fromhex("050013FF00")
    response = handle_pdu(bytes.fromhex("01 00 13 00 01".replace(" ", "")), state)
    assert response == bytes([0x01, 0x01, 0x01])


def test_fresh_state_reads_zero():
    state = PlcState()
    for address in (0, 123, 65000):
        response = handle_pdu(struct.pack(">BHH", 0x03, address, 2), state)
        assert response == bytes([0x03, 4, 0, 0, 0, 0])


def test_read_quantity_zero_is_illegal_value():
    state = PlcState()
    response = handle_pdu(struct.pack(">BHH", 0x01, 0, 0), state)
    assert response == bytes([0x81, 0x03])


def test_read_past_end_is_illegal_address():
    state = PlcState()
    response = handle_pdu(struct.pack(">BHH", 0x03, 65535, 2), state)
    assert response == bytes([0x83, 0x02])


def test_write_single_coil_bad_value():
    state = PlcState()
    response = handle_pdu(struct.pack(">BHH", 0x05, 0, 0x1234), state)
    assert response == bytes([0x85, 0x03])


def test_unknown_function_code():
    state = PlcState()
    assert handle_pdu(bytes([0x2B, 0x00]), state) == bytes([0xAB, 0x01])


def test_adu_echoes_transaction_and_unit():
    state = PlcState()
    request = build_adu(0xBEEF, 17, read_request(0x01, 0, 8))
    response = modbus_handle_adu(request, state)
    transaction, unit, pdu = split_adu(response)
    assert transaction == 0xBEEF and unit == 17
    assert pdu == bytes([0x01, 0x01, 0x00])


def test_short_adu_is_frame_error():
    with pytest.raises(ModbusFrameError):
        modbus_handle_adu(b"\x00\x01\x00\x00\x00", PlcState())


def test_mismatched_mbap_length_is_frame_error():
    pdu = read_request(0x01, 0, 1)
    request = struct.pack(">HHHB", 1, 0, 99, 1) + pdu
    with pytest.raises(ModbusFrameError):
        modbus_handle_adu(request, PlcState())


def _random_pdu(rng: random.Random) -> bytes:
    choice = rng.randrange(8)
    address = rng.randrange(0, 65536)
    if choice == 0:
        return read_request(rng.choice([0x01, 0x02]), address, rng.randrange(0, 2100))
    if choice == 1:
        return read_request(rng.choice([0x03, 0x04]), address, rng.randrange(0, 130))
    if choice == 2:
        value = rng.choice([0x0000, 0xFF00, rng.randrange(0, 65536)])
        return struct.pack(">BHH", 0x05, address, value)
    if choice == 3:
        return write_single_register(address, rng.randrange(0, 65536))
    if choice == 4:
        return write_multiple_coils(address, [rng.randrange(2) for _ in range(rng.randrange(1, 40))])
    if choice == 5:
        return write_multiple_registers(address, [rng.randrange(65536) for _ in range(rng.randrange(1, 20))])
    if choice == 6:
        return write_single_coil(address, rng.random() < 0.5)
    return bytes([rng.choice([0x07, 0x2B, 0x11]), 0x00])


def test_randomized_conformance_against_shadow_model():
    rng = random.Random(20240817)
    state = PlcState()
    shadow = ShadowModel()
    for _ in range(2000):
        pdu = _random_pdu(rng)
        expected = shadow.expected_response(pdu)
        actual = handle_pdu(pdu, state)
        assert actual == expected, f"divergence on {pdu.hex()}"


def test_read_your_writes_random():
    rng = random.Random(7)
    state = PlcState()
    for _ in range(300):
        address = rng.randrange(0, 65536)
        value = rng.randrange(0, 65536)
        handle_pdu(write_single_register(address, value), state)
        response = handle_pdu(read_request(0x03, address, 1), state)
        assert response == bytes([0x03, 2]) + struct.pack(">H", value)
        on = rng.random() < 0.5
        handle_pdu(write_single_coil(address, on), state)
        response = handle_pdu(read_request(0x01, address, 1), state)
        assert response == bytes([0x01, 1, 1 if on else 0])


@settings(max_examples=300, deadline=None)
@given(st.binary(min_size=1, max_size=300))
def test_fuzz_pdu_never_crashes(data):
    state = PlcState()
    try:
        response = handle_pdu(data, state)
    except ModbusFrameError:
        return
    assert len(response) >= 2

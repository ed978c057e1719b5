"""Live virtual plant: real sockets against the emulated controllers."""

import asyncio
import json

import pytest

from linetwin.plantconfig import PlantConfig
from linetwin.virtualplant import STEPPED, PlantStartupError, SimClock, start_virtual_plant

from .conftest import run
from .modbus_ref import ShadowModel, TcpClient, read_request, write_single_coil


def test_demo_plant_exposes_two_endpoints(demo_config):
    async def scenario():
        plant = await start_virtual_plant(demo_config, SimClock(STEPPED))
        try:
            assert set(plant.endpoints) == {"plc1", "ros-ras-pi"}
        finally:
            await plant.stop()

    run(scenario())


def test_empty_config_has_no_endpoints():
    async def scenario():
        plant = await start_virtual_plant(PlantConfig(plant_id="p", plant_name="P"), SimClock(STEPPED))
        try:
            assert plant.endpoints == {}
        finally:
            await plant.stop()

    run(scenario())


def test_conflicting_ports_raise_startup_error(demo_config):
    async def scenario():
        for controller in demo_config.controllers:
            controller.port = 39321
        with pytest.raises(PlantStartupError) as excinfo:
            await start_virtual_plant(demo_config, SimClock(STEPPED), use_config_ports=True)
        assert "ros-ras-pi" in str(excinfo.value)

    run(scenario())


def test_modbus_over_tcp_matches_pure_core(demo_config):
    # The same operations through a socket and through the in-memory core
    # must byte-match (the wire layer adds nothing but framing).
    async def scenario():
        plant = await start_virtual_plant(demo_config, SimClock(STEPPED))
        host, port = plant.endpoints["plc1"]

        def drive():
            client = TcpClient(host, port, unit_id=1)
            shadow = ShadowModel()
            try:
                for pdu in [
                    write_single_coil(100, True),
                    read_request(0x01, 100, 1),
                    read_request(0x03, 0, 10),
                    read_request(0x01, 0, 0),       # illegal quantity -> 0x03
                    read_request(0x04, 65535, 2),   # illegal address -> 0x02
                ]:
                    assert client.request(pdu) == shadow.expected_response(pdu)
            finally:
                client.close()

        try:
            await asyncio.get_event_loop().run_in_executor(None, drive)
        finally:
            await plant.stop()

    run(scenario())


def test_garbled_modbus_frame_closes_connection(demo_config):
    async def scenario():
        plant = await start_virtual_plant(demo_config, SimClock(STEPPED))
        host, port = plant.endpoints["plc1"]
        try:
            reader, writer = await asyncio.open_connection(host, port)
            writer.write(b"\x00\x01\x00\x00\xff\xff" + b"junk")
            await writer.drain()
            assert await reader.read(64) == b""  # closed without crashing
            writer.close()

            # The listener still accepts new connections afterwards.
            reader2, writer2 = await asyncio.open_connection(host, port)
            writer2.write(bytes.fromhex("0001000000060103000A0001"))
            await writer2.drain()
            response = await reader2.readexactly(11)
            assert response[7] == 0x03
            writer2.close()
        finally:
            await plant.stop()

    run(scenario())


def test_stamp_handshake_over_wire(demo_config):
    # Stamp trigger coil is 16; busy/done inputs 16/17; nominal 3 s.
    async def scenario():
        clock = SimClock(STEPPED)
        plant = await start_virtual_plant(demo_config, clock)
        host, port = plant.endpoints["plc1"]
        reader, writer = await asyncio.open_connection(host, port)

        async def request(pdu: bytes) -> bytes:
            writer.write(b"\x00\x01\x00\x00" + (len(pdu) + 1).to_bytes(2, "big") + b"\x01" + pdu)
            await writer.drain()
            header = await reader.readexactly(7)
            return await reader.readexactly(int.from_bytes(header[4:6], "big") - 1)

        try:
            await request(write_single_coil(16, True))
            await plant.step(1.0)
            busy = await request(read_request(0x02, 16, 2))
            assert busy == bytes([0x02, 1, 0b01])  # busy set, done clear
            await plant.step(1.0)
            await plant.step(1.0)
            done = await request(read_request(0x02, 16, 2))
            assert done == bytes([0x02, 1, 0b10])  # done latched, busy clear
            await request(write_single_coil(16, False))
            await plant.step(1.0)
            idle = await request(read_request(0x02, 16, 2))
            assert idle == bytes([0x02, 1, 0b00])
        finally:
            writer.close()
            await plant.stop()

    run(scenario())


def test_robot_gateway_over_wire(demo_config):
    async def scenario():
        clock = SimClock(STEPPED)
        plant = await start_virtual_plant(demo_config, clock)
        host, port = plant.endpoints["ros-ras-pi"]
        reader, writer = await asyncio.open_connection(host, port)

        async def send(msg: dict) -> dict:
            writer.write(json.dumps(msg).encode() + b"\n")
            await writer.drain()
            return json.loads(await reader.readline())

        try:
            status = await send({"type": "status"})
            assert status["phase"] == "idle" and status["position"] == "warehouse"

            accepted = await send({"type": "cmd", "command": "move", "params": {"to": "punch"}})
            assert accepted["type"] == "accepted"

            rejected = await send({"type": "cmd", "command": "move", "params": {"to": "index"}})
            assert rejected == {"type": "rejected", "reason": "busy"}

            for _ in range(8):  # 4 s nominal at 0.5 s steps
                await plant.step(0.5)
            event = json.loads(await asyncio.wait_for(reader.readline(), 5))
            assert event["event"] == "completed" and event["position"] == "punch"

            status = await send({"type": "status"})
            assert status["position"] == "punch" and status["phase"] == "idle"
        finally:
            writer.close()
            await plant.stop()

    run(scenario())


def test_realtime_clock_mode(demo_config):
    # Scaled wall clock: 3 s of simulated stamping at 30x finishes fast.
    async def scenario():
        from linetwin.virtualplant import REALTIME_SCALED

        clock = SimClock(REALTIME_SCALED, scale=30.0)
        plant = await start_virtual_plant(demo_config, clock)
        host, port = plant.endpoints["plc1"]
        reader, writer = await asyncio.open_connection(host, port)

        async def request(pdu: bytes) -> bytes:
            writer.write(b"\x00\x01\x00\x00" + (len(pdu) + 1).to_bytes(2, "big") + b"\x01" + pdu)
            await writer.drain()
            header = await reader.readexactly(7)
            return await reader.readexactly(int.from_bytes(header[4:6], "big") - 1)

        try:
            await request(write_single_coil(16, True))
            deadline = asyncio.get_event_loop().time() + 5.0
            while True:
                response = await request(read_request(0x02, 17, 1))
                if response == bytes([0x02, 1, 1]):
                    break
                assert asyncio.get_event_loop().time() < deadline, "done bit never rose"
                await asyncio.sleep(0.02)
        finally:
            writer.close()
            await plant.stop()

    run(scenario())

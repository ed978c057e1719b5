"""MQTT bridge against a stub broker collecting raw frames."""

import asyncio
import json

from linetwin.adapters import EventBus
from linetwin.adapters.events import TelemetrySample
from linetwin.adapters.mqtt_bridge import CONNECT, PUBLISH, MqttBridge, read_packet

from .conftest import run


class StubBroker:
    def __init__(self):
        self.publishes: list[tuple[str, dict]] = []
        self.connected = asyncio.Event()
        self.got_publish = asyncio.Event()
        self.server = None

    async def start(self):
        self.server = await asyncio.start_server(self._handle, "127.0.0.1", 0)
        return self.server.sockets[0].getsockname()[1]

    async def _handle(self, reader, writer):
        packet_type, _body = await read_packet(reader)
        assert packet_type == CONNECT
        writer.write(bytes([0x20, 0x02, 0x00, 0x00]))  # CONNACK, accepted
        await writer.drain()
        self.connected.set()
        try:
            while True:
                packet_type, body = await read_packet(reader)
                if packet_type == PUBLISH:
                    topic_len = int.from_bytes(body[:2], "big")
                    topic = body[2:2 + topic_len].decode()
                    payload = json.loads(body[2 + topic_len:])
                    self.publishes.append((topic, payload))
                    self.got_publish.set()
        except (asyncio.IncompleteReadError, ConnectionError):
            pass

    async def stop(self):
        self.server.close()
        await self.server.wait_closed()


def test_bridge_republishes_bus_telemetry():
    async def scenario():
        broker = StubBroker()
        port = await broker.start()
        bridge = MqttBridge("127.0.0.1", port)
        bus = EventBus()
        bridge.attach(bus)

        bus.publish_telemetry(TelemetrySample("plant/p/m/busy", True, 1.5))
        await asyncio.wait_for(broker.got_publish.wait(), 5.0)
        bus.publish_telemetry(TelemetrySample("plant/p/m/busy", False, 2.0))
        deadline = asyncio.get_running_loop().time() + 5.0
        while len(broker.publishes) < 2:
            assert asyncio.get_running_loop().time() < deadline
            await asyncio.sleep(0.01)

        topics = [t for t, _ in broker.publishes]
        assert topics == ["plant/p/m/busy", "plant/p/m/busy"]
        payloads = [p for _, p in broker.publishes]
        assert payloads[0]["value"] is True and payloads[1]["value"] is False
        assert all(isinstance(p["ts"], int) for p in payloads)

        await bridge.close()
        await broker.stop()

    run(scenario())


def test_bridge_rejected_connection_does_not_crash_bus():
    async def scenario():
        async def refuse(reader, writer):
            packet_type, _ = await read_packet(reader)
            writer.write(bytes([0x20, 0x02, 0x00, 0x05]))  # not authorized
            await writer.drain()
            writer.close()

        server = await asyncio.start_server(refuse, "127.0.0.1", 0)
        port = server.sockets[0].getsockname()[1]
        bridge = MqttBridge("127.0.0.1", port)
        bus = EventBus()
        bridge.attach(bus)
        bus.publish_telemetry(TelemetrySample("plant/p/m/busy", True, 1.0))
        await asyncio.sleep(0.1)  # bridge retries in the background
        assert bridge.published == 0
        await bridge.close()
        server.close()
        await server.wait_closed()

    run(scenario())

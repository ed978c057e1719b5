import asyncio

import pytest

from linetwin.aml import parse_caex
from linetwin.fixtures import demo_plant_xml
from linetwin.plantconfig import extract_plant_config


@pytest.fixture(scope="session")
def demo_xml() -> str:
    return demo_plant_xml()


@pytest.fixture()
def demo_doc(demo_xml):
    return parse_caex(demo_xml)


@pytest.fixture()
def demo_config(demo_doc):
    return extract_plant_config(demo_doc).config


def run(coro, timeout=60.0):
    """Drive an async test scenario to completion with a hard timeout."""
    async def wrapped():
        return await asyncio.wait_for(coro, timeout)

    return asyncio.run(wrapped())


async def drive_stepped(plant, awaitable, dt=0.25, settle=50, max_steps=100_000):
    """Advance a stepped-clock plant until the awaitable finishes.

    Between steps the event loop is yielded repeatedly so TCP round trips
    can make progress; sim time only moves via plant.step().
    """
    task = asyncio.ensure_future(awaitable)
    steps = 0
    while not task.done():
        for _ in range(settle):
            if task.done():
                break
            await asyncio.sleep(0)
        if task.done():
            break
        await plant.step(dt)
        steps += 1
        if steps >= max_steps:
            task.cancel()
            raise AssertionError("stepped drive exceeded max step budget")
    return await task

"""Token execution engine vs the brute-force oracle."""

import asyncio
import itertools
import random

from linetwin.adapters.events import RunEvent
from linetwin.bpmn import CommandDispatcher, ExecutionPolicy, execute

from .bpmn_oracle import (
    build_process,
    count_nodes,
    enumerate_blocks,
    oracle_outcomes,
    random_blocks,
)
from .conftest import run


class InstantDispatcher(CommandDispatcher):
    """Accepts everything; commands complete on the next loop tick."""

    def __init__(self, fail_names=()):
        self.dispatched = []
        self.fail_names = set(fail_names)
        self._seq = itertools.count(1)

    async def submit(self, capability_id, params):
        self.dispatched.append((capability_id, dict(params)))
        return f"c{next(self._seq)}", ""

    async def wait_terminal(self, command_id):
        await asyncio.sleep(0)
        index = int(command_id[1:]) - 1
        name = self.dispatched[index][0]
        kind = "failed" if name in self.fail_names else "completed"
        return RunEvent(event_id=f"{command_id}-t", command_id=command_id,
                        kind=kind, detail="", at=0.0)


class ManualDispatcher(CommandDispatcher):
    """Completion is test-controlled per command."""

    def __init__(self):
        self.dispatched = []
        self.futures = {}
        self._seq = itertools.count(1)

    async def submit(self, capability_id, params):
        command_id = f"c{next(self._seq)}"
        self.dispatched.append((command_id, capability_id))
        self.futures[command_id] = asyncio.get_running_loop().create_future()
        return command_id, ""

    def complete(self, command_id):
        self.futures[command_id].set_result(
            RunEvent(event_id=f"{command_id}-t", command_id=command_id,
                     kind="completed", detail="", at=0.0))

    async def wait_terminal(self, command_id):
        return await self.futures[command_id]


class BusyOnceDispatcher(InstantDispatcher):
    """Rejects the first submit of each capability with busy, then accepts."""

    def __init__(self):
        super().__init__()
        self.rejected_once = set()

    async def submit(self, capability_id, params):
        if capability_id not in self.rejected_once:
            self.rejected_once.add(capability_id)
            return None, "busy"
        return await super().submit(capability_id, params)


def _bind_tasks(process):
    # The oracle builder names tasks Step1..; bind them 1:1 as capability ids.
    for node in process.service_tasks():
        node.capability_id = node.name
    return process


def test_empty_process_two_entries():
    process = _bind_tasks(build_process([]))
    log = run(execute(process, InstantDispatcher()))
    assert log.outcome == "completed"
    assert [(e.node_id, e.phase) for e in log.entries] == [
        (process.start_events()[0].node_id, "entered"),
        (process.end_events()[0].node_id, "entered"),
    ]


def test_sequential_dispatch_order():
    process = _bind_tasks(build_process([("task",), ("task",), ("task",)]))
    dispatcher = InstantDispatcher()
    log = run(execute(process, dispatcher))
    assert log.outcome == "completed"
    assert [name for name, _ in dispatcher.dispatched] == ["Step1", "Step2", "Step3"]


def test_parallel_fork_dispatches_before_completion():
    process = _bind_tasks(build_process([("par", [[("task",)], [("task",)]])]))
    dispatcher = ManualDispatcher()

    async def scenario():
        task = asyncio.ensure_future(execute(process, dispatcher))
        for _ in range(50):
            await asyncio.sleep(0)
        # Both branches dispatched while neither has completed.
        assert len(dispatcher.dispatched) == 2
        for command_id, _ in list(dispatcher.dispatched):
            dispatcher.complete(command_id)
        log = await task
        assert log.outcome == "completed"
        # The join fired exactly once.
        joins = [e for e in log.entries if "join fired" in e.detail]
        assert len(joins) == 1

    run(scenario())


def test_exclusive_no_path_fails_run():
    process = _bind_tasks(build_process(
        [("xor", [("false", [("task",)]), ("false", [])], None)]))
    log = run(execute(process, InstantDispatcher()))
    assert log.outcome == "failed"
    assert log.stats["failure"] == "no_path"


def test_failed_task_fails_fast():
    process = _bind_tasks(build_process([("task",), ("task",)]))
    dispatcher = InstantDispatcher(fail_names={"Step1"})
    log = run(execute(process, dispatcher))
    assert log.outcome == "failed"
    assert [name for name, _ in dispatcher.dispatched] == ["Step1"]


def test_failed_task_without_fail_fast_continues_other_branches():
    process = _bind_tasks(build_process([("par", [[("task",)], [("task",)]])]))
    dispatcher = InstantDispatcher(fail_names={"Step1"})
    log = run(execute(process, dispatcher, policy=ExecutionPolicy(fail_fast=False)))
    assert log.outcome == "failed"
    assert sorted(name for name, _ in dispatcher.dispatched) == ["Step1", "Step2"]


def test_busy_rejection_retries_once():
    process = _bind_tasks(build_process([("task",)]))
    dispatcher = BusyOnceDispatcher()
    from linetwin.virtualplant import STEPPED, SimClock

    async def scenario():
        clock = SimClock(STEPPED)
        task = asyncio.ensure_future(execute(process, dispatcher, clock=clock))
        for _ in range(200):
            if task.done():
                break
            await asyncio.sleep(0)
            clock.step(0.5)
        return await task

    log = run(scenario())
    assert log.outcome == "completed"
    assert [name for name, _ in dispatcher.dispatched] == ["Step1"]


def test_token_conservation_on_completion():
    process = _bind_tasks(build_process(
        [("task",), ("par", [[("task",)], [("task",), ("task",)]]), ("task",)]))
    log = run(execute(process, InstantDispatcher()))
    assert log.outcome == "completed"
    assert log.stats["tokens_created"] == log.stats["tokens_consumed"]
    assert log.stats["stuck_tokens"] == 0


def test_determinism_same_inputs_same_entry_sequence():
    blocks = [("task",), ("xor", [("true", [("task",)]), (None, [])], 1), ("task",)]
    process = _bind_tasks(build_process(blocks))
    first = run(execute(process, InstantDispatcher()))
    second = run(execute(process, InstantDispatcher()))
    assert [(e.node_id, e.phase) for e in first.entries] == \
           [(e.node_id, e.phase) for e in second.entries]


def test_exhaustive_small_graphs_match_oracle():
    # Every structured process with at most 6 nodes (start + end + 4 inner).
    cases = 0
    for blocks in enumerate_blocks(4):
        if count_nodes(blocks) > 4:
            continue
        process = _bind_tasks(build_process(blocks))
        expected = oracle_outcomes(process)
        log = run(execute(process, InstantDispatcher()))
        assert log.outcome in expected, (blocks, log.outcome, expected, log.stats)
        if len(expected) == 1:
            assert {log.outcome} == expected, (blocks, log.stats)
        cases += 1
    assert cases >= 50  # the family is non-trivial


def test_randomized_graphs_conservation_and_oracle():
    rng = random.Random(424242)
    for _ in range(500):
        blocks = random_blocks(rng, budget=10)
        n = rng.randrange(0, 4)
        process = _bind_tasks(build_process(blocks, variables={"n": "integer"}))
        expected = oracle_outcomes(process, {"n": n})
        log = run(execute(process, InstantDispatcher(), vars={"n": n}))
        assert log.outcome in expected, (blocks, log.outcome, expected)
        if log.outcome == "completed":
            assert log.stats["tokens_created"] == log.stats["tokens_consumed"]
            assert log.stats["stuck_tokens"] == 0

"""Token-semantics execution of a validated process.

Tokens travel along sequence flows: service tasks dispatch their capability
and forward on completion, exclusive gateways route by the first true
condition (missing condition counts as true, default flow as fallback),
parallel gateways consume one token per incoming flow before emitting one
per outgoing flow. The run ends when every token has been consumed by an
end event, or on the first failure in fail-fast mode.
"""

from __future__ import annotations

import asyncio
import logging
from collections import Counter, deque
from dataclasses import dataclass, field

from ..adapters.events import RunEvent
from ..virtualplant.clock import SimClock
from .exprs import EvalError, evaluate, evaluate_condition
from .model import BpmnNode, BpmnProcess, RunEntry, RunLog

log = logging.getLogger(__name__)

BUSY_RETRY_WAIT_S = 1.0
MAX_SUBMIT_ATTEMPTS = 2


class CommandDispatcher:
    """What the engine needs from the middleware layer."""

    async def submit(self, capability_id: str, params: dict) -> tuple[str | None, str]:
        """Returns (command_id, "") when accepted, (None, reason) otherwise."""
        raise NotImplementedError

    async def wait_terminal(self, command_id: str) -> RunEvent:
        raise NotImplementedError


@dataclass
class ExecutionPolicy:
    fail_fast: bool = True


@dataclass
class _Pending:
    node: BpmnNode
    seq: int
    command_id: str


@dataclass
class _Token:
    node_id: str
    via_flow: str | None
    attempts: int = 0


@dataclass
class _RunState:
    ready: deque = field(default_factory=deque)
    arrivals: dict = field(default_factory=dict)  # node_id -> Counter[flow_id]
    created: int = 0
    consumed: int = 0
    end_tokens: int = 0
    failed: bool = False
    failure_detail: str = ""


async def execute(
    process: BpmnProcess,
    dispatcher: CommandDispatcher,
    vars: dict | None = None,
    policy: ExecutionPolicy | None = None,
    clock: SimClock | None = None,
    run_id: str = "run",
    mode: str = "virtual",
    observer=None,
) -> RunLog:
    """Execute a process that already passed validate_process cleanly.

    `observer`, when given, receives each RunEntry as it is recorded (for
    live streaming).
    """
    policy = policy or ExecutionPolicy()
    run_vars = dict(vars or {})
    run = RunLog(run_id=run_id, process_id=process.process_id, mode=mode)
    state = _RunState()
    pending: dict[asyncio.Task, _Pending] = {}
    parked: list[_Token] = []
    dispatch_seq = 0
    entry_seq = 0

    def now() -> float:
        nonlocal entry_seq
        if clock is not None:
            return clock.now_s
        entry_seq += 1
        return float(entry_seq)

    def record(node_id: str, phase: str, detail: str = "") -> None:
        entry = RunEntry(at=now(), node_id=node_id, phase=phase, detail=detail)
        run.entries.append(entry)
        if observer is not None:
            observer(entry)

    def fail(detail: str) -> None:
        state.failed = True
        if not state.failure_detail:
            state.failure_detail = detail

    def emit_tokens(node: BpmnNode, flows=None) -> None:
        for flow in flows if flows is not None else process.outgoing(node.node_id):
            state.created += 1
            state.ready.append(_Token(flow.target, flow.flow_id))

    async def dispatch(token: _Token, node: BpmnNode) -> None:
        nonlocal dispatch_seq
        try:
            params = {name: evaluate(expr, run_vars) for name, expr in node.param_exprs.items()}
        except EvalError as exc:
            record(node.node_id, "failed", f"parameter evaluation: {exc}")
            fail(str(exc))
            return
        detail = node.capability_id or node.name
        if params:
            rendered = ",".join(f"{k}={params[k]}" for k in sorted(params))
            detail = f"{detail}({rendered})"
        record(node.node_id, "dispatched", detail)
        command_id, reason = await dispatcher.submit(node.capability_id, params)
        if command_id is None:
            if reason == "busy" and token.attempts + 1 < MAX_SUBMIT_ATTEMPTS:
                # The token will be consumed again on retry; re-credit it.
                state.created += 1
                parked.append(_Token(node.node_id, token.via_flow, token.attempts + 1))
                return
            record(node.node_id, "failed", f"dispatch rejected: {reason}")
            fail(f"dispatch rejected: {reason}")
            return
        dispatch_seq += 1
        wait = asyncio.ensure_future(dispatcher.wait_terminal(command_id))
        pending[wait] = _Pending(node=node, seq=dispatch_seq, command_id=command_id)

    async def process_token(token: _Token) -> None:
        node = process.node(token.node_id)
        if node is None:
            fail(f"token reached unknown node {token.node_id}")
            return
        if node.kind == "parallel_gateway":
            counters = state.arrivals.setdefault(node.node_id, Counter())
            counters[token.via_flow] += 1
            incoming = process.incoming(node.node_id)
            if all(counters[f.flow_id] >= 1 for f in incoming):
                for f in incoming:
                    counters[f.flow_id] -= 1
                    state.consumed += 1
                if not +counters:
                    del state.arrivals[node.node_id]
                record(node.node_id, "entered")
                record(node.node_id, "completed", "join fired" if len(incoming) > 1 else "fork")
                emit_tokens(node)
            return

        state.consumed += 1
        record(node.node_id, "entered")
        if node.kind == "start_event":
            emit_tokens(node)
        elif node.kind == "end_event":
            state.end_tokens += 1
        elif node.kind == "service_task":
            await dispatch(token, node)
        elif node.kind == "exclusive_gateway":
            chosen = None
            try:
                for flow in process.outgoing(node.node_id):
                    if flow.flow_id == node.default_flow_id:
                        continue
                    if flow.condition is None or evaluate_condition(flow.condition, run_vars):
                        chosen = flow
                        break
            except EvalError as exc:
                record(node.node_id, "failed", f"condition: {exc}")
                fail(str(exc))
                return
            if chosen is None and node.default_flow_id:
                chosen = next((f for f in process.outgoing(node.node_id)
                               if f.flow_id == node.default_flow_id), None)
            if chosen is None:
                record(node.node_id, "failed", "no_path")
                fail("no_path")
                return
            record(node.node_id, "completed", chosen.flow_id)
            emit_tokens(node, [chosen])

    # Start: exactly one token appears at the start event.
    start = process.start_events()[0]
    state.created += 1
    state.ready.append(_Token(start.node_id, None))

    while True:
        while state.ready and not (state.failed and policy.fail_fast):
            await process_token(state.ready.popleft())
        if state.failed and policy.fail_fast:
            break
        if pending:
            done, _ = await asyncio.wait(set(pending), return_when=asyncio.FIRST_COMPLETED)
            for task in sorted(done, key=lambda t: pending[t].seq):
                info = pending.pop(task)
                event: RunEvent = task.result()
                if event.kind == "completed":
                    record(info.node.node_id, "completed", info.command_id)
                    emit_tokens(info.node)
                else:
                    record(info.node.node_id, "failed", f"{event.kind}: {event.detail}")
                    fail(f"{info.node.node_id}: {event.kind}")
            if parked:
                state.ready.extend(parked)
                parked.clear()
        elif parked:
            # Busy rejection with nothing in flight: the contention is
            # external; wait briefly and retry once.
            if clock is not None:
                await clock.sleep(BUSY_RETRY_WAIT_S)
            else:
                await asyncio.sleep(0)
            state.ready.extend(parked)
            parked.clear()
        elif not state.ready:
            break

    for task in pending:
        task.cancel()
    for task in pending:
        try:
            await task
        except (asyncio.CancelledError, Exception):
            pass

    stuck = sum(sum(c.values()) for c in state.arrivals.values())
    if not state.failed and stuck:
        fail(f"deadlock: {stuck} token(s) stuck at parallel joins")
    live = state.created - state.consumed - stuck - len(pending) - len(parked)
    if not state.failed and live != 0:
        fail(f"token accounting broke: {live} unaccounted tokens")

    run.outcome = "failed" if state.failed else "completed"
    if state.failed:
        run.stats["failure"] = state.failure_detail
    run.stats.update({
        "tokens_created": state.created,
        "tokens_consumed": state.consumed,
        "end_tokens": state.end_tokens,
        "stuck_tokens": stuck,
    })
    return run

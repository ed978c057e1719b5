"""Robot gateway emulation: single-arm command execution with async events.

The wire protocol (newline-delimited JSON over TCP) is handled in plant.py;
this module is the pure state machine: one active command at a time,
commands complete after their nominal duration, completion moves the arm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

DEFAULT_MOVE_DURATION_S = 4.0


@dataclass
class ActiveCommand:
    command_id: str
    command: str
    params: dict
    done_at_s: float
    target_position: str


@dataclass
class RobotGatewayState:
    command_set: list[str] = field(default_factory=lambda: ["move", "home"])
    home_position: str = "home"
    position: str = ""
    durations: dict[str, float] = field(default_factory=dict)
    active: ActiveCommand | None = None
    next_seq: int = 1

    def __post_init__(self):
        if not self.position:
            self.position = self.home_position


def robot_gateway_handle(msg: dict, state: RobotGatewayState, now_s: float) -> dict:
    """Process one request message; commands while busy are rejected."""
    msg_type = msg.get("type")
    if msg_type == "status":
        return {
            "type": "status_reply",
            "phase": "busy" if state.active else "idle",
            "position": state.position,
            "active_command_id": state.active.command_id if state.active else None,
        }
    if msg_type != "cmd":
        return {"type": "rejected", "reason": "bad_message"}

    command = msg.get("command")
    params = msg.get("params") or {}
    if command not in state.command_set:
        return {"type": "rejected", "reason": "unknown_command"}
    if state.active is not None:
        return {"type": "rejected", "reason": "busy"}

    if command == "home":
        target = state.home_position
    else:
        target = str(params.get("to", "")).strip()
        if not target:
            return {"type": "rejected", "reason": "invalid_params"}

    command_id = f"c-{state.next_seq}"
    state.next_seq += 1
    duration = state.durations.get(command, DEFAULT_MOVE_DURATION_S)
    state.active = ActiveCommand(
        command_id=command_id,
        command=command,
        params=dict(params),
        done_at_s=now_s + duration,
        target_position=target,
    )
    return {"type": "accepted", "command_id": command_id}


def robot_gateway_advance(state: RobotGatewayState, now_s: float) -> list[dict]:
    """Emit completion events for commands whose duration has elapsed."""
    if state.active is None or now_s < state.active.done_at_s - 1e-9:
        return []
    command = state.active
    state.position = command.target_position
    state.active = None
    return [{
        "type": "event",
        "event": "completed",
        "command_id": command.command_id,
        "position": state.position,
    }]

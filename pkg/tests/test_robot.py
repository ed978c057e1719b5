"""Robot gateway state machine: hand-traced command sessions."""

from linetwin.virtualplant import RobotGatewayState, robot_gateway_advance, robot_gateway_handle


def _fresh():
    return RobotGatewayState(
        command_set=["move", "home"],
        home_position="warehouse",
        durations={"move": 4.0},
    )


def test_single_move_session():
    state = _fresh()
    reply = robot_gateway_handle({"type": "cmd", "command": "move", "params": {"to": "punch"}}, state, 0.0)
    assert reply["type"] == "accepted"
    command_id = reply["command_id"]

    assert robot_gateway_advance(state, 3.9) == []
    events = robot_gateway_advance(state, 4.0)
    assert events == [{"type": "event", "event": "completed", "command_id": command_id, "position": "punch"}]
    assert state.position == "punch"
    assert state.active is None


def test_status_on_fresh_gateway():
    reply = robot_gateway_handle({"type": "status"}, _fresh(), 0.0)
    assert reply == {
        "type": "status_reply",
        "phase": "idle",
        "position": "warehouse",
        "active_command_id": None,
    }


def test_second_command_while_busy_rejected():
    state = _fresh()
    first = robot_gateway_handle({"type": "cmd", "command": "move", "params": {"to": "punch"}}, state, 0.0)
    assert first["type"] == "accepted"
    second = robot_gateway_handle({"type": "cmd", "command": "move", "params": {"to": "index"}}, state, 1.0)
    assert second == {"type": "rejected", "reason": "busy"}
    # The original command still completes with its own target.
    events = robot_gateway_advance(state, 4.0)
    assert events[0]["position"] == "punch"


def test_unknown_command_rejected():
    reply = robot_gateway_handle({"type": "cmd", "command": "dance", "params": {}}, _fresh(), 0.0)
    assert reply == {"type": "rejected", "reason": "unknown_command"}


def test_home_command_returns_to_home():
    state = _fresh()
    robot_gateway_handle({"type": "cmd", "command": "move", "params": {"to": "index"}}, state, 0.0)
    robot_gateway_advance(state, 4.0)
    assert state.position == "index"
    reply = robot_gateway_handle({"type": "cmd", "command": "home"}, state, 4.0)
    assert reply["type"] == "accepted"
    robot_gateway_advance(state, 8.0)
    assert state.position == "warehouse"


def test_move_without_target_rejected():
    reply = robot_gateway_handle({"type": "cmd", "command": "move", "params": {}}, _fresh(), 0.0)
    assert reply == {"type": "rejected", "reason": "invalid_params"}


def test_bad_message_rejected():
    reply = robot_gateway_handle({"hello": "world"}, _fresh(), 0.0)
    assert reply == {"type": "rejected", "reason": "bad_message"}

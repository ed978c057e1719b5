from .behaviors import (
    MachineBehavior,
    PHASE_BUSY,
    PHASE_DONE,
    PHASE_FAULTED,
    PHASE_IDLE,
    behavior_for,
    init_behavior_state,
    step_behavior,
)
from .clock import REALTIME_SCALED, STEPPED, SimClock
from .modbus_core import ModbusFrameError, PlcState, handle_pdu, modbus_handle_adu
from .plant import PlantStartupError, VirtualPlant, start_virtual_plant
from .robot import RobotGatewayState, robot_gateway_advance, robot_gateway_handle

__all__ = [
    "MachineBehavior",
    "ModbusFrameError",
    "PHASE_BUSY",
    "PHASE_DONE",
    "PHASE_FAULTED",
    "PHASE_IDLE",
    "PlantStartupError",
    "PlcState",
    "REALTIME_SCALED",
    "RobotGatewayState",
    "STEPPED",
    "SimClock",
    "VirtualPlant",
    "behavior_for",
    "handle_pdu",
    "init_behavior_state",
    "modbus_handle_adu",
    "robot_gateway_advance",
    "robot_gateway_handle",
    "start_virtual_plant",
    "step_behavior",
]

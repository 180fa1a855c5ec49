from .exceptions import MissionFailed, SimulationError
from .sim_schema import (
    DynamicsMode,
    IntegratorKind,
    MissionReport,
    SimConfig,
    SimulationRequest,
    UserEvent,
    VerifyCase,
    VerifyReport,
)
from .integrator import ArmState, MobileBaseState, integrate_step, rk4_step, semi_implicit_euler_step
from .controller import JointReference, base_velocity_control, computed_torque_control, spray_reaction_feedforward
from .arm_tracking import ArmTracker, tool_aim_roll, tool_frame, tool_rotation
from .mission_runner import MissionResult, MissionRunner, run_mission
from .reports import simulate, write_outputs
from .verify import run_verification

from .exceptions import InvalidReading, MissionError, RoomError, WindowNotFull
from .mission_schema import MissionPhase, PauseEvent, PauseReason, RoomDocument, TraceRecord
from .room import Obstacle, RayHit, RoomModel, load_room, room_from_document
from .sonar import DEFAULT_MOUNTS, RangeStatus, SonarMount, SonarReading, SonarSuite, sonar_measure
from .localization import (
    WheelOdometry,
    correct_pose,
    dead_reckon,
    estimate_yaw,
    pose_from_transform,
    register_world_frame,
    wrap_angle,
)
from .monitors import (
    CupStatus,
    GuardStatus,
    ImuWindow,
    ObstacleGuard,
    PaintCup,
    detect_empty_cup,
    obstacle_guard,
)
from .base_motion import BaseMotion, TrapezoidProfile, plan_go_to
from .mission_plan import MissionPlan, TipTarget, build_mission_plan
from .state_machine import MissionCommand, MissionState, SensorFrame, initial_state, mission_step

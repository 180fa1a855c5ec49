"""Operation sequence of the painting mission as a pure transition function.

mission_step takes the previous state and one frame of sensor data and
returns the next state with the base, arm and spray commands. The simulator
owns the state and calls it once per executive tick.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from services.kinematics import Transform
from .localization import correct_pose, dead_reckon, estimate_yaw, pose_from_transform, register_world_frame
from .mission_plan import DOWN_AIM, REFILL_TIP, STOW_TIP, Activity, CoreStripActivity, MissionPlan, TipTarget, blend_tips
from .mission_schema import PAINTING_PHASES, MissionPhase, PauseReason
from .monitors import IMU_WINDOW, CupStatus, GuardStatus, ObstacleGuard
from .room import WALL_COUNT, RoomModel
from .sonar import DEFAULT_MOUNTS, RangeStatus, SonarMount, SonarReading, mounts_by_role

logger = logging.getLogger(__name__)

EXECUTIVE_DT = 0.05
ORIENTATION_SAMPLES = 10
SEEK_SPEED = 0.2
SEEK_TURN_RATE = 0.3
SEEK_TIMEOUT = 60.0
REFILL_MOVE = 2.0
RESUME_BLEND = 2.0
UNCERTAINTY_GROWTH = 0.01  # metres of doubt per metre travelled
CORRECTED_UNCERTAINTY = 0.01

_LOCALIZATION_SONARS = ("FRONT", "RIGHT", "SIDE1", "SIDE2")


@dataclass(frozen=True)
class SensorFrame:
    """Everything the executive sees in one tick"""
    sonar: Mapping[str, SonarReading]
    odometry: Tuple[float, float] = (0.0, 0.0)  # mobility read from the wheel encoders
    cup: Optional[CupStatus] = None
    paint_level: float = 1.0
    refilled: bool = False
    user_pause: bool = False
    user_resume: bool = False
    user_stop: bool = False


@dataclass(frozen=True)
class MissionCommand:
    u_b: np.ndarray
    tip: TipTarget
    spray: bool


@dataclass(frozen=True)
class PauseInfo:
    reason: PauseReason
    interrupted: MissionPhase
    since: float
    tip: TipTarget


@dataclass(frozen=True)
class ArmBlend:
    start: TipTarget
    since: float
    duration: float = RESUME_BLEND


@dataclass(frozen=True)
class MissionState:
    t: float = 0.0
    phase: MissionPhase = MissionPhase.INIT
    est_pose: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    uncertainty: float = math.inf
    world_frame: Optional[Transform] = None
    activity_index: int = -1
    activity: Optional[Activity] = None
    activity_time: float = 0.0
    walls_completed: int = 0
    strips_done: int = 0
    paint_level: float = 1.0
    guard: ObstacleGuard = field(default_factory=ObstacleGuard)
    orientation_samples: Tuple[Tuple[float, float, float, float], ...] = ()
    phase_since: float = 0.0
    tip: TipTarget = TipTarget(STOW_TIP)
    pause: Optional[PauseInfo] = None
    resume_blend: Optional[ArmBlend] = None
    phase_time: Dict[str, float] = field(default_factory=dict)
    phase_entries: Dict[str, int] = field(default_factory=lambda: {MissionPhase.INIT.value: 1})
    stop_reason: Optional[str] = None

    @property
    def wall(self) -> Optional[int]:
        return self.activity.wall if self.activity is not None else None

    @property
    def strip(self) -> Optional[int]:
        return self.activity.strip if self.activity is not None else None

    @property
    def paused(self) -> bool:
        return self.phase is MissionPhase.PAUSED

    @property
    def terminated(self) -> bool:
        return self.phase is MissionPhase.TERMINATED


def initial_state(pose_guess: Tuple[float, float, float] = (0.0, 0.0, 0.0)) -> MissionState:
    return MissionState(est_pose=tuple(float(v) for v in pose_guess))


def _enter(state: MissionState, phase: MissionPhase, count: bool = True, **changes) -> MissionState:
    entries = dict(state.phase_entries)
    new_strip = changes.get("activity", state.activity) is not state.activity
    if count and (phase is not state.phase or new_strip and phase is MissionPhase.PAINT_CORE_STRIP):
        entries[phase.value] = entries.get(phase.value, 0) + 1
    if phase is not state.phase:
        logger.debug("t=%.2f %s -> %s", state.t, state.phase.value, phase.value)
    return replace(state, phase=phase, phase_since=state.t, phase_entries=entries, **changes)


def _hold(state: MissionState) -> MissionCommand:
    return MissionCommand(np.zeros(2), state.tip, False)


def _terminate(state: MissionState, reason: str) -> Tuple[MissionState, MissionCommand]:
    logger.info("mission terminated at t=%.2f: %s", state.t, reason)
    state = _enter(state, MissionPhase.TERMINATED, stop_reason=reason, pause=None, resume_blend=None)
    return state, _hold(state)


def _valid(readings: Mapping[str, SonarReading], name: str) -> bool:
    reading = readings.get(name)
    return reading is not None and reading.valid


def expected_obstacle_ranges(room: RoomModel, pose, mounts=DEFAULT_MOUNTS) -> Dict[str, float]:
    """Known-wall distances the obstacle sonars should read from the estimated pose"""
    expected = {}
    for mount in mounts_by_role("obstacle", mounts):
        origin, direction = mount.world_ray(pose)
        hit = room.ray_cast(origin, direction, include_obstacles=False)
        if hit is not None and math.isfinite(hit.distance):
            expected[mount.name] = hit.distance
    return expected


# -- pre-painting phases ----------------------------------------------------------------

def _seek_step(state: MissionState, sensors: SensorFrame) -> Tuple[MissionState, MissionCommand]:
    readings = sensors.sonar
    if _valid(readings, "FRONT") and _valid(readings, "RIGHT"):
        state = _enter(state, MissionPhase.MEASURE_ORIENTATION, orientation_samples=())
        return state, _hold(state)
    if state.t - state.phase_since > SEEK_TIMEOUT:
        return _terminate(state, "no reliable location found")
    front = readings.get("FRONT")
    if front is None or not front.valid:
        # too far from the front wall: approach it; too close: back off
        toward = front is None or front.status is RangeStatus.OUT_OF_RANGE
        u = np.array([SEEK_SPEED if toward else -SEEK_SPEED, 0.0])
    else:
        u = np.array([0.0, -SEEK_TURN_RATE])
    return state, MissionCommand(u, state.tip, False)


def _measure_step(state: MissionState, sensors: SensorFrame) -> Tuple[MissionState, MissionCommand]:
    readings = sensors.sonar
    if not all(_valid(readings, name) for name in _LOCALIZATION_SONARS):
        state = _enter(state, MissionPhase.SEEK_RELIABLE_LOCATION, orientation_samples=())
        return state, _hold(state)
    sample = tuple(readings[name].value for name in _LOCALIZATION_SONARS)
    samples = state.orientation_samples + (sample,)
    state = replace(state, orientation_samples=samples)
    if len(samples) >= ORIENTATION_SAMPLES:
        state = _enter(state, MissionPhase.REGISTER_WORLD_FRAME)
    return state, _hold(state)


def _register_step(state: MissionState, plan: MissionPlan, mounts) -> Tuple[MissionState, MissionCommand]:
    front, right, side1, side2 = np.mean(np.array(state.orientation_samples), axis=0)
    first, second = mounts_by_role("side", mounts)
    yaw = estimate_yaw(float(side1), float(side2), first.x - second.x)
    frame = register_world_frame(float(front), float(right), yaw, mounts)
    state = replace(state, world_frame=frame, est_pose=pose_from_transform(frame),
                    uncertainty=CORRECTED_UNCERTAINTY)
    return _start_activity(state, plan, 0, 0.0)


# -- activities -------------------------------------------------------------------------

def _start_activity(state: MissionState, plan: MissionPlan, index: int,
                    carry: float) -> Tuple[MissionState, MissionCommand]:
    if index >= len(plan.activities):
        return _terminate(state, "initial orientation reached")
    activity = plan.activities[index].begin(plan.room, state.est_pose, state.tip)
    state = _enter(state, activity.phase, activity=activity, activity_index=index, activity_time=carry)
    return _run_activity(state)


def _complete_activity(state: MissionState) -> MissionState:
    activity = state.activity
    if isinstance(activity, CoreStripActivity):
        return replace(state, strips_done=state.strips_done + 1)
    if activity.phase is MissionPhase.ROTATE_TO_NEXT_WALL:
        logger.info("wall %d done at t=%.1f", activity.wall, state.t)
        return replace(state, walls_completed=min(WALL_COUNT, state.walls_completed + 1))
    return state


def _run_activity(state: MissionState) -> Tuple[MissionState, MissionCommand]:
    activity, local = state.activity, state.activity_time
    tip = activity.tip_target(local)
    blend = state.resume_blend
    if blend is not None:
        elapsed = state.t - blend.since
        if elapsed < blend.duration:
            tip = blend_tips(blend.start, tip, elapsed, blend.duration)
            state = replace(state, tip=tip)
            return state, MissionCommand(np.zeros(2), tip, False)
        state = replace(state, resume_blend=None)
    u_b = activity.base_command(local, state.est_pose)
    spray = state.phase in PAINTING_PHASES and activity.spray_on(local)
    return replace(state, tip=tip), MissionCommand(u_b, tip, spray)


def _activity_step(state: MissionState, plan: MissionPlan, dt: float) -> Tuple[MissionState, MissionCommand]:
    if state.resume_blend is None:
        state = replace(state, activity_time=state.activity_time + dt)
    if state.activity.finished(state.activity_time):
        carry = state.activity_time - state.activity.duration
        state = _complete_activity(state)
        return _start_activity(state, plan, state.activity_index + 1, carry)
    return _run_activity(state)


# -- pausing ----------------------------------------------------------------------------

def _pause(state: MissionState, reason: PauseReason) -> Tuple[MissionState, MissionCommand]:
    logger.info("paused (%s) at t=%.2f in %s", reason.value, state.t, state.phase.value)
    info = PauseInfo(reason, state.phase, state.t, state.tip)
    state = _enter(state, MissionPhase.PAUSED, pause=info, resume_blend=None)
    return state, _hold(state)


def _paused_step(state: MissionState, sensors: SensorFrame) -> Tuple[MissionState, MissionCommand]:
    info = state.pause
    clear = state.guard.status is GuardStatus.CLEAR
    if info.reason is PauseReason.OBSTACLE:
        resume = clear
    elif info.reason is PauseReason.EMPTY_CUP:
        resume = clear and sensors.refilled
    else:
        resume = clear and sensors.user_resume

    if resume:
        logger.info("resuming %s after %.1f s (%s)", info.interrupted.value, state.t - info.since, info.reason.value)
        changes = dict(pause=None, activity=state.activity, activity_time=state.activity_time)
        if info.reason is PauseReason.EMPTY_CUP and state.activity is not None:
            if isinstance(state.activity, CoreStripActivity):
                # the gun ran dry before the vibration window noticed
                changes["activity_time"] = max(0.0, state.activity_time - IMU_WINDOW)
            changes["resume_blend"] = ArmBlend(state.tip, state.t)
        state = _enter(state, info.interrupted, count=False, **changes)
        return state, _hold(state)

    if info.reason is PauseReason.EMPTY_CUP:
        refill = TipTarget(REFILL_TIP, 0.0, DOWN_AIM)
        state = replace(state, tip=blend_tips(info.tip, refill, state.t - info.since, REFILL_MOVE))
    return state, _hold(state)


# -- entry point ------------------------------------------------------------------------

def mission_step(
    state: MissionState,
    sensors: SensorFrame,
    plan: MissionPlan,
    dt: float = EXECUTIVE_DT,
    mounts: Tuple[SonarMount, ...] = DEFAULT_MOUNTS,
    corrections: bool = True,
) -> Tuple[MissionState, MissionCommand]:
    """Advance the mission by one executive tick; corrections=False leaves dead reckoning alone"""
    phase_time = dict(state.phase_time)
    phase_time[state.phase.value] = phase_time.get(state.phase.value, 0.0) + dt
    est = dead_reckon(state.est_pose, sensors.odometry, dt)
    travelled = abs(sensors.odometry[0]) * dt
    state = replace(state, t=state.t + dt, est_pose=est, phase_time=phase_time,
                    paint_level=sensors.paint_level, uncertainty=state.uncertainty + UNCERTAINTY_GROWTH * travelled)
    if state.terminated:
        return state, _hold(state)

    expected = None
    if state.world_frame is not None:
        if corrections:
            correction = correct_pose(state.est_pose, sensors.sonar, plan.room, mounts)
            uncertainty = CORRECTED_UNCERTAINTY if correction.accepted else state.uncertainty
            state = replace(state, est_pose=correction.pose, uncertainty=uncertainty)
        expected = expected_obstacle_ranges(plan.room, state.est_pose, mounts)
    obstacle_readings = [sensors.sonar[m.name] for m in mounts_by_role("obstacle", mounts) if m.name in sensors.sonar]
    state = replace(state, guard=state.guard.update(obstacle_readings, state.t, expected))

    if sensors.user_stop:
        return _terminate(state, "stopped by user")
    if state.paused:
        return _paused_step(state, sensors)

    if state.phase is not MissionPhase.INIT:
        if state.guard.status is GuardStatus.PAUSE_REQUIRED:
            return _pause(state, PauseReason.OBSTACLE)
        if sensors.user_pause:
            return _pause(state, PauseReason.USER)
        if state.phase in PAINTING_PHASES and sensors.cup is CupStatus.EMPTY:
            return _pause(state, PauseReason.EMPTY_CUP)

    if state.phase is MissionPhase.INIT:
        state = _enter(state, MissionPhase.SEEK_RELIABLE_LOCATION)
        return state, _hold(state)
    if state.phase is MissionPhase.SEEK_RELIABLE_LOCATION:
        return _seek_step(state, sensors)
    if state.phase is MissionPhase.MEASURE_ORIENTATION:
        return _measure_step(state, sensors)
    if state.phase is MissionPhase.REGISTER_WORLD_FRAME:
        return _register_step(state, plan, mounts)
    return _activity_step(state, plan, dt)

"""Closed-loop simulation of one painting mission.

The runner owns the ground truth (base pose, arm state, paint cup, sensors)
and calls the executive once per executive tick. Between ticks the plant is
advanced either kinematically (the base follows the commanded mobility and
the tip sits on its target) or with the arm and base dynamics under their
controllers.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from config.config import Config
from services.dynamics import BaseDynamicsModel, DynamicsError, FrictionCoefficients, SprayDisturbance
from services.kinematics import KinematicsError, NoConvergence, arm_fk
from services.kinematics import base_kinematics as bk
from services.mission.localization import WheelOdometry, dead_reckon, wrap_angle
from services.mission.mission_plan import (
    AdvancePostActivity,
    CoreStripActivity,
    MissionPlan,
    build_mission_plan,
)
from services.mission.mission_schema import MissionPhase, PauseEvent, PauseReason, TraceRecord
from services.mission.monitors import IMU_RATE, ImuWindow, PaintCup, detect_empty_cup
from services.mission.room import WALL_COUNT, RoomModel
from services.mission.sonar import SonarSuite
from services.mission.state_machine import MissionCommand, MissionState, SensorFrame, initial_state, mission_step
from services.params.params_schema import RobotParams
from services.trajectory.coverage import CoverageMap, new_coverage_map, stamp_samples
from .arm_tracking import ArmTracker
from .controller import base_velocity_control, computed_torque_control
from .exceptions import MissionFailed
from .integrator import ArmState, MobileBaseState, integrate_step
from .sim_schema import (
    DynamicsMode,
    LocalizationStats,
    MissionReport,
    PaintingRates,
    PowerReport,
    SimConfig,
    WallCoverage,
)

logger = logging.getLogger(__name__)

NORMAL_STOP = "initial orientation reached"
USER_STOP = "stopped by user"

JOINT_LOG_COLUMNS = (
    ["t"]
    + [f"q{i}" for i in range(1, 7)]
    + [f"qd{i}" for i in range(1, 7)]
    + [f"tau{i}" for i in range(1, 7)]
    + ["tip_x", "tip_y", "tip_z", "spray"]
)


class _Abort(Exception):
    pass


@dataclass
class _WallSamples:
    positions: List[Tuple[float, float]] = field(default_factory=list)
    spray: List[bool] = field(default_factory=list)
    rolls: List[float] = field(default_factory=list)

    def add(self, u: float, z: float, spray: bool, roll: float) -> None:
        self.positions.append((u, z))
        self.spray.append(spray)
        self.rolls.append(roll)


@dataclass
class MissionResult:
    report: MissionReport
    plan: MissionPlan
    coverages: List[CoverageMap]
    trace: List[TraceRecord]
    joint_log: np.ndarray


def tip_in_world(pose: Sequence[float], tip: Sequence[float]) -> np.ndarray:
    """Base-frame point -> world point for a base at pose (x, y, phi)"""
    x, y, phi = pose
    c, s = math.cos(phi), math.sin(phi)
    return np.array([x + c * tip[0] - s * tip[1], y + s * tip[0] + c * tip[1], tip[2]])


def _rate(area: float, seconds: float) -> float:
    return area / (seconds / 3600.0) if seconds > 0.0 else 0.0


class MissionRunner:
    """Runs the executive against a simulated robot and room"""

    def __init__(self, params: RobotParams, room: RoomModel, config: Optional[SimConfig] = None,
                 plan: Optional[MissionPlan] = None) -> None:
        self.params = params
        self.room = room
        self.config = config or SimConfig()
        cfg = self.config
        self.seed = cfg.seed if cfg.seed is not None else Config.get_instance().DEFAULT_SEED
        sonar_seq, odometry_seq, spray_seq = np.random.SeedSequence(self.seed).spawn(3)
        self.sonar_rng = np.random.default_rng(sonar_seq)
        self.odometry_rng = np.random.default_rng(odometry_seq)
        self.plan = plan or build_mission_plan(room, v_max=cfg.base_speed_cap, a_max=cfg.base_accel)

        self.suite = SonarSuite(noise_sigma=cfg.sonar_noise)
        self.odometry = WheelOdometry(params, tuple(cfg.odometry_radius_errors), cfg.odometry_rate_noise)
        self.disturbance = SprayDisturbance.from_rng(params.spray, np.random.default_rng(spray_seq))
        self.friction = FrictionCoefficients.from_defaults(params.dynamics)
        self.cup = PaintCup(cfg.cup_capacity, cfg.cup_capacity)
        self.imu = ImuWindow()
        self.tracker = ArmTracker(params)
        self._sampled = self._sampled_activities()

        # ground truth
        self.true_pose: Tuple[float, float, float] = tuple(float(v) for v in room.start_pose)
        self._u_true = np.zeros(2)
        self._q_b = np.zeros(bk.N_COORDINATES)
        self._arm: Optional[ArmState] = None
        self._base: Optional[MobileBaseState] = None
        self._base_model: Optional[BaseDynamicsModel] = None
        self._dynamic = False
        self._ik_disabled: Optional[int] = None
        self._spray_flag = False
        self._last_spray = False
        self._roll = 0.0
        self._last_roll = 0.0
        self._wall: Optional[int] = None

        # operator and user
        self._refilled = False
        self._events = sorted(cfg.user_events, key=lambda e: e.t)
        self._next_event = 0

        # bookkeeping
        self.samples: Dict[int, _WallSamples] = {k: _WallSamples() for k in range(WALL_COUNT)}
        self.trace: List[TraceRecord] = []
        self.joint_rows: List[List[float]] = []
        self.pause_events: List[PauseEvent] = []
        self.position_errors: List[float] = []
        self.heading_errors: List[float] = []
        self.spray_time = 0.0
        self.first_paint: Optional[float] = None
        self.max_tracking_error = 0.0
        self.max_residual: Optional[float] = None
        self.ik_failures = 0
        self.arm_energy = self.wheel_energy = 0.0
        self.arm_time = self.base_time = 0.0
        self._tick = 0
        self._arm_steps = 0

    def _sampled_activities(self) -> Set[int]:
        if self.config.dynamics_mode is not DynamicsMode.SAMPLED:
            return set()
        chosen: Set[int] = set()
        for wall in self.config.sample_walls:
            for kind in (CoreStripActivity, AdvancePostActivity):
                index = next((i for i, a in enumerate(self.plan.activities)
                              if isinstance(a, kind) and a.wall == wall), None)
                if index is not None:
                    chosen.add(index)
        return chosen

    # -- main loop ------------------------------------------------------------------------

    def run(self) -> MissionResult:
        cfg = self.config
        dt = cfg.executive_dt
        state = initial_state()
        command = MissionCommand(np.zeros(2), state.tip, False)
        failure: Optional[str] = None
        logger.info("Simulating room '%s' (seed %d, %s dynamics)", self.room.name, self.seed, cfg.dynamics_mode.value)
        try:
            while not state.terminated:
                if state.t >= cfg.duration_cap:
                    raise _Abort(f"duration cap of {cfg.duration_cap:.0f} s reached")
                if state.paused and state.t - state.pause.since > cfg.max_pause:
                    raise _Abort(f"paused for {state.pause.reason.value} longer than {cfg.max_pause:.0f} s")
                self._advance(state.t, command)
                sensors = self._sense(state)
                previous = state
                state, command = mission_step(state, sensors, self.plan, dt, corrections=cfg.corrections)
                self._observe(previous, state, command)
        except _Abort as exc:
            failure = str(exc)
        except (DynamicsError, KinematicsError) as exc:
            failure = f"dynamics failed: {exc}"

        if failure is None and state.stop_reason not in (NORMAL_STOP, USER_STOP):
            failure = state.stop_reason or "mission ended without a stop reason"
        result = self._result(state, failure)
        if failure is not None:
            logger.error("Mission failed at t=%.2f: %s", state.t, failure)
            raise MissionFailed(failure, result.report, result)
        logger.info("Mission finished at t=%.1f s: %.2f m^2 painted, coverage %.4f",
                    state.t, result.report.painted_area, result.report.covered_fraction)
        return result

    # -- plant ----------------------------------------------------------------------------

    def _advance(self, t0: float, command: MissionCommand) -> None:
        """Advance the ground truth over one executive tick under the last command"""
        dt = self.config.executive_dt
        spraying = self._spray_flag
        paint = not self.cup.empty
        if self._dynamic:
            self._u_true = self._advance_dynamic(t0, command, spraying, paint)
        else:
            self._u_true = np.asarray(command.u_b, dtype=float)
            self.true_pose = dead_reckon(self.true_pose, self._u_true, dt)
        if spraying:
            n = int(round(dt * IMU_RATE))
            self.imu.extend(self.disturbance.acceleration(t0 + i / IMU_RATE, paint) for i in range(n))
            if paint:
                self.spray_time += dt
            self.cup.consume(dt)
        else:
            self.imu.clear()

    def _advance_dynamic(self, t0: float, command: MissionCommand, spraying: bool, paint: bool) -> np.ndarray:
        cfg = self.config
        n_base = max(1, int(round(cfg.executive_dt / cfg.base_dt)))
        base_dt = cfg.executive_dt / n_base
        n_arm = max(1, int(round(base_dt / cfg.dt)))
        arm_dt = base_dt / n_arm
        u_ref = np.asarray(command.u_b, dtype=float)
        u_mean = np.zeros(2)
        external = None
        if spraying and cfg.disturbances:
            def external(t: float, q: np.ndarray) -> np.ndarray:
                return self.disturbance.joint_torque(q, t, self.params, paint)

        for j in range(n_base):
            tb = t0 + j * base_dt
            before = self._base
            if np.any(before.u != 0.0) or np.any(u_ref != 0.0):
                wheel_torque = base_velocity_control(self._base_model, before.q, before.u, u_ref,
                                                     cfg.base_velocity_gain)
                _, after = integrate_step(None, before, None, wheel_torque, base_dt, self.params,
                                          base_model=self._base_model, scheme=cfg.integrator, t=tb)
                wheel_speed = before.velocity(self.params)[[bk.WHEEL1, bk.WHEEL2]]
                self.wheel_energy += abs(float(wheel_torque @ wheel_speed)) * base_dt
                residual = bk.constraint_residual(after.q, after.velocity(self.params), self.params)
                self.max_residual = max(self.max_residual or 0.0, residual)
                self._base = after
            self.base_time += base_dt
            u_mean += 0.5 * (before.u + self._base.u) / n_base

            for i in range(n_arm):
                t = tb + i * arm_dt
                arm = self._arm
                ref = self.tracker.reference(t)
                torque = computed_torque_control(ref, arm.q, arm.qd, cfg.kp, cfg.kd, self.params,
                                                 friction=self.friction, spraying=spraying)
                self._arm, _ = integrate_step(arm, None, torque, None, arm_dt, self.params, scheme=cfg.integrator,
                                              t=t, friction=self.friction, external=external)
                self.arm_energy += abs(float(torque @ arm.qd)) * arm_dt
                self.arm_time += arm_dt
                self._arm_steps += 1
                if self._arm_steps % cfg.joint_log_every == 0:
                    tip = self._tip_world(self._arm.q)
                    self.joint_rows.append([t + arm_dt, *self._arm.q, *self._arm.qd, *torque, *tip, float(spraying)])

            t_end = tb + base_dt
            tool = arm_fk(self._arm.q, self.params).translation
            wanted = arm_fk(self.tracker.reference(t_end).q, self.params).translation
            self.max_tracking_error = max(self.max_tracking_error, float(np.linalg.norm(tool - wanted)))
            self.true_pose = self._base.pose
            self._record_sample(self._tip_world(self._arm.q), spraying and paint, self._roll)
        return u_mean

    def _tip_world(self, q: np.ndarray) -> np.ndarray:
        tip = arm_fk(q, self.params).translation + self.params.geometry.arm_mount
        return tip_in_world(self.true_pose, tip)

    def _record_sample(self, tip_world: np.ndarray, painting: bool, roll: float) -> None:
        if self._wall is None:
            return
        u, _ = self.room.wall_coordinates(self._wall, tip_world[:2])
        self.samples[self._wall].add(float(u), float(tip_world[2]), painting, roll)

    # -- sensors, operator and user ------------------------------------------------------

    def _sense(self, state: MissionState) -> SensorFrame:
        t = state.t + self.config.executive_dt
        sonar = self.suite.measure_all(self.room, self.true_pose, self.sonar_rng, t)
        odometry = self.odometry.measure(self._u_true, self.config.executive_dt, self.odometry_rng)
        cup = detect_empty_cup(self.imu) if self.imu.full else None
        flags = {"user_pause": False, "user_resume": False, "user_stop": False}
        while self._next_event < len(self._events) and self._events[self._next_event].t <= t:
            event = self._events[self._next_event]
            logger.info("user %s at t=%.2f", event.action, t)
            flags[f"user_{event.action}"] = True
            self._next_event += 1
        return SensorFrame(sonar, (float(odometry[0]), float(odometry[1])), cup, self.cup.level,
                           self._operator(state, t), **flags)

    def _operator(self, state: MissionState, t: float) -> bool:
        """Refills the cup once the robot has waited refill_delay in an empty-cup pause"""
        if not (state.paused and state.pause.reason is PauseReason.EMPTY_CUP):
            self._refilled = False
            return False
        if not self._refilled and t - state.pause.since >= self.config.refill_delay:
            self.cup.refill()
            self.imu.clear()
            self._refilled = True
        return self._refilled

    # -- executive output ---------------------------------------------------------------

    def _observe(self, previous: MissionState, state: MissionState, command: MissionCommand) -> None:
        self._tick += 1
        self._track_pauses(previous, state)
        if self.first_paint is None and state.phase is MissionPhase.PAINT_CORE_STRIP:
            self.first_paint = previous.t
        if state.world_frame is not None:
            est, true = state.est_pose, self.true_pose
            self.position_errors.append(math.hypot(est[0] - true[0], est[1] - true[1]))
            self.heading_errors.append(abs(wrap_angle(est[2] - true[2])))

        self._wall = state.wall
        wanted = self._wants_dynamics(state)
        if wanted and not self._dynamic:
            self._begin_dynamics(state, command)
        elif not wanted and self._dynamic:
            self._end_dynamics()
        elif self._dynamic:
            try:
                self.tracker.push(command.tip, state.t)
                self._spray_flag, self._roll = self._last_spray, self._last_roll
            except NoConvergence as exc:
                self._ik_failed(state, exc)
        if self._dynamic:
            self._last_spray, self._last_roll = command.spray, command.tip.roll
        else:
            self._spray_flag, self._roll = command.spray, command.tip.roll
            tip = np.asarray(command.tip.position, dtype=float)
            self._record_sample(tip_in_world(self.true_pose, tip), command.spray and not self.cup.empty, self._roll)

        if self._tick % self.config.trace_every == 0:
            self.trace.append(TraceRecord(
                t=state.t, phase=state.phase, wall=state.wall, strip=state.strip,
                true_pose=self.true_pose, est_pose=state.est_pose,
                u_b=(float(command.u_b[0]), float(command.u_b[1])),
                spray=command.spray, paint_level=self.cup.level,
            ))

    def _track_pauses(self, previous: MissionState, state: MissionState) -> None:
        if state.paused and not previous.paused:
            self.pause_events.append(PauseEvent(
                reason=state.pause.reason, phase=state.pause.interrupted,
                wall=previous.wall, strip=previous.strip, t_start=state.t))
        elif previous.paused and not state.paused and self.pause_events:
            self.pause_events[-1] = self.pause_events[-1].model_copy(update={"t_end": state.t})

    def _wants_dynamics(self, state: MissionState) -> bool:
        mode = self.config.dynamics_mode
        if mode is DynamicsMode.KINEMATIC or state.activity is None or state.terminated:
            return False
        if state.activity_index == self._ik_disabled:
            return False
        return mode is DynamicsMode.FULL or state.activity_index in self._sampled

    def _begin_dynamics(self, state: MissionState, command: MissionCommand) -> None:
        try:
            q = self.tracker.start(command.tip, state.t)
        except NoConvergence as exc:
            self._ik_failed(state, exc)
            return
        self._arm = ArmState(q, np.zeros(6))
        self._base_model = BaseDynamicsModel(self.params, q)
        q_b = self._q_b.copy()
        q_b[bk.X], q_b[bk.Y], q_b[bk.PHI] = self.true_pose
        if np.any(self._u_true != 0.0):
            q_b[[bk.BETA1, bk.BETA2]] = bk.trailing_castor_angles(self._u_true, self.params)
        self._base = MobileBaseState(q_b, self._u_true)
        self._dynamic = True
        self._spray_flag, self._roll = command.spray, command.tip.roll
        logger.info("t=%.2f dynamics on for %s (wall %s)", state.t, state.phase.value, state.wall)

    def _end_dynamics(self) -> None:
        self._q_b = self._base.q.copy()
        self._u_true = self._base.u.copy()
        self.true_pose = self._base.pose
        self.tracker.stop()
        self._arm = self._base = self._base_model = None
        self._dynamic = False
        logger.debug("dynamics off")

    def _ik_failed(self, state: MissionState, exc: NoConvergence) -> None:
        self.ik_failures += 1
        self._ik_disabled = state.activity_index
        logger.warning("t=%.2f tip target unreachable (%s); %s continues kinematically",
                       state.t, exc, state.phase.value)
        if self._dynamic:
            self._end_dynamics()

    # -- report ---------------------------------------------------------------------------

    def _coverages(self) -> List[CoverageMap]:
        coverages = []
        for k in range(WALL_COUNT):
            coverage = new_coverage_map(self.room.wall_spec(k))
            samples = self.samples[k]
            if samples.positions:
                stamp_samples(coverage, samples.positions, samples.spray, samples.rolls)
            coverages.append(coverage)
        return coverages

    def _core_area(self, state: MissionState) -> float:
        strips = [a for a in self.plan.activities if isinstance(a, CoreStripActivity)]
        area = 0.0
        for activity in strips[:state.strips_done]:
            wall_plan = self.plan.paint.walls[activity.wall]
            area += next(s.nominal_area for s in wall_plan.strips if s.index == activity.strip)
        return area

    def _localization(self) -> LocalizationStats:
        if not self.position_errors:
            return LocalizationStats(mean_error=0.0, rms_error=0.0, max_error=0.0, final_error=0.0,
                                     max_heading_error=0.0)
        errors = np.asarray(self.position_errors)
        return LocalizationStats(
            mean_error=float(errors.mean()),
            rms_error=float(np.sqrt(np.mean(errors ** 2))),
            max_error=float(errors.max()),
            final_error=float(errors[-1]),
            max_heading_error=float(max(self.heading_errors)),
        )

    def _result(self, state: MissionState, failure: Optional[str]) -> MissionResult:
        coverages = self._coverages()
        painted = sum(c.covered_area for c in coverages)
        covered_cells = sum(int(np.count_nonzero(c.covered)) for c in coverages)
        paintable_cells = sum(int(np.count_nonzero(c.paintable)) for c in coverages)
        phase_time = dict(state.phase_time)
        core_time = (phase_time.get(MissionPhase.PAINT_CORE_STRIP.value, 0.0)
                     + phase_time.get(MissionPhase.ADVANCE_POST.value, 0.0))
        painting_time = state.t - self.first_paint if self.first_paint is not None else 0.0
        for event in self.pause_events:
            if event.t_end is None:
                event.t_end = state.t

        report = MissionReport(
            room=self.room.name,
            seed=self.seed,
            dynamics_mode=self.config.dynamics_mode,
            success=failure is None and state.stop_reason == NORMAL_STOP,
            stop_reason=failure or state.stop_reason,
            painted_area=painted,
            paintable_area=sum(c.paintable_area for c in coverages),
            wall_area=self.room.wall_area,
            opening_area=self.room.opening_area,
            covered_fraction=covered_cells / paintable_cells if paintable_cells else 0.0,
            spray_time=self.spray_time,
            total_time=state.t,
            painting_time=painting_time,
            core_time=core_time,
            rates=PaintingRates(
                painting=_rate(painted, state.t),
                core=_rate(self._core_area(state), core_time),
                overall=_rate(painted, painting_time),
                spray=_rate(painted, self.spray_time),
            ),
            max_tracking_error=self.max_tracking_error,
            max_constraint_residual=self.max_residual,
            ik_failures=self.ik_failures,
            localization=self._localization(),
            pause_events=list(self.pause_events),
            phase_entries=dict(state.phase_entries),
            phase_time=phase_time,
            walls=[WallCoverage(**c.summary()) for c in coverages],
            power=PowerReport(arm_energy=self.arm_energy, wheel_energy=self.wheel_energy,
                              arm_time=self.arm_time, base_time=self.base_time),
        )
        joint_log = np.array(self.joint_rows, dtype=float).reshape(-1, len(JOINT_LOG_COLUMNS))
        return MissionResult(report, self.plan, coverages, self.trace, joint_log)


def run_mission(params: RobotParams, room: RoomModel, config: Optional[SimConfig] = None) -> MissionResult:
    """Simulate a full mission; MissionFailed carries the partial report and result"""
    return MissionRunner(params, room, config).run()

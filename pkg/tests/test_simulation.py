import math

import numpy as np
import pytest
from scipy.optimize import brentq

from services.dynamics import BaseDynamicsModel, SprayDisturbance, arm_energy, arm_gravity, arm_mass_matrix
from services.dynamics import arm_inverse_dynamics_lagrange, arm_potential_energy
from services.kinematics import arm_fk
from services.kinematics import base_kinematics as bk
from services.mission import MissionPhase, PauseReason, TipTarget, room_from_document
from services.mission.mission_plan import DOWN_AIM, REFILL_TIP
from services.mission.mission_schema import PAINTING_PHASES, TraceRecord
from services.simulation import (
    ArmState,
    ArmTracker,
    DynamicsMode,
    IntegratorKind,
    JointReference,
    MissionFailed,
    MobileBaseState,
    SimConfig,
    UserEvent,
    computed_torque_control,
    integrate_step,
    run_mission,
    tool_aim_roll,
    tool_frame,
    tool_rotation,
)
from services.simulation.arm_tracking import PAINT_SEED
from services.simulation.mission_runner import JOINT_LOG_COLUMNS, NORMAL_STOP, USER_STOP
from services.simulation.verify import drift_trend

GAINS_P = [400.0] * 6
GAINS_D = [40.0] * 6

SMALL_ROOM = {
    "name": "small",
    "footprint": {"Lx": 4.0, "Ly": 4.0},
    "height": 2.7,
    "start_pose": [2.0, 2.0, -math.pi / 2],
}


def _joint2_equilibrium(params):
    """Hanging equilibrium of joint 2 with the other joints at zero"""
    def torque(x):
        return arm_gravity([0.0, x, 0.0, 0.0, 0.0, 0.0], params)[1]

    grid = np.linspace(-np.pi, np.pi, 721)
    values = [torque(x) for x in grid]
    for a, b, ga, gb in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if ga < 0.0 <= gb:
            return brentq(torque, a, b, xtol=1e-14)
    raise AssertionError("joint 2 has no stable equilibrium")


def _pendulum(params, amplitude):
    q_eq = _joint2_equilibrium(params)
    q = np.zeros(6)
    q[1] = q_eq + amplitude
    return q_eq, ArmState(q, np.zeros(6))


def _swing(params, arm, dt, duration, scheme=IntegratorKind.RK4):
    """Largest energy deviation of the joint-2 pendulum over the run"""
    start = arm_energy(arm.q, arm.qd, params, include_rotor=True)
    worst = 0.0
    for k in range(int(round(duration / dt))):
        arm, _ = integrate_step(arm, None, None, None, dt, params, scheme=scheme, t=k * dt, free_joints=[1])
        worst = max(worst, abs(arm_energy(arm.q, arm.qd, params, include_rotor=True) - start))
    return worst


def _tip_target(params, q):
    """Tip target reproducing the pose of the arm at q"""
    tool = arm_fk(q, params)
    aim, roll = tool_aim_roll(tool.rotation)
    position = tool.translation + params.geometry.arm_mount
    return TipTarget(tuple(position), roll, aim)


# -- integrator -------------------------------------------------------------------------

def test_zero_state_stays_put_without_gravity(params, rng):
    arm = ArmState(rng.uniform(-np.pi, np.pi, size=6), np.zeros(6))
    q_b = np.zeros(bk.N_COORDINATES)
    q_b[[bk.X, bk.Y, bk.PHI]] = [1.0, 2.0, 0.3]
    base = MobileBaseState(q_b, np.zeros(2))
    next_arm, next_base = integrate_step(arm, base, np.zeros(6), np.zeros(2), 1e-3, params, gravity=0.0)
    np.testing.assert_allclose(next_arm.q, arm.q, atol=1e-12)
    np.testing.assert_allclose(next_arm.qd, 0.0, atol=1e-12)
    np.testing.assert_allclose(next_base.q, base.q, atol=1e-12)
    np.testing.assert_allclose(next_base.u, 0.0, atol=1e-12)


def test_nonpositive_step_rejected(params):
    with pytest.raises(ValueError):
        integrate_step(ArmState(np.zeros(6), np.zeros(6)), None, None, None, 0.0, params)


def test_locked_joint_pendulum_period(params):
    q_eq, arm = _pendulum(params, 1e-3)
    h = 1e-6
    stiffness = (arm_gravity([0.0, q_eq + h, 0, 0, 0, 0], params)[1]
                 - arm_gravity([0.0, q_eq - h, 0, 0, 0, 0], params)[1]) / (2.0 * h)
    inertia = arm_mass_matrix([0.0, q_eq, 0, 0, 0, 0], params, include_rotor=True)[1, 1]
    period = 2.0 * math.pi / math.sqrt(stiffness / inertia)

    dt = 5e-3
    crossings = []
    previous = arm.q[1] - q_eq
    for k in range(int(1.4 * period / dt)):
        arm, _ = integrate_step(arm, None, None, None, dt, params, t=k * dt, free_joints=[1])
        current = arm.q[1] - q_eq
        if previous * current < 0.0:
            crossings.append(k * dt + dt * previous / (previous - current))
        previous = current
    assert len(crossings) >= 3
    measured = crossings[2] - crossings[0]
    assert abs(measured - period) / period < 1e-3
    np.testing.assert_allclose(arm.q[[0, 2, 3, 4, 5]], 0.0, atol=1e-12)


def test_rk4_energy_error_is_fourth_order(params):
    _, arm = _pendulum(params, 0.5)
    coarse = _swing(params, arm, 0.02, 1.0)
    fine = _swing(params, arm, 0.01, 1.0)
    assert coarse / fine > 10.0


def test_semi_implicit_euler_energy_stays_bounded(params):
    q_eq, arm = _pendulum(params, 0.5)
    swing = (arm_potential_energy(arm.q, params)
             - arm_potential_energy([0.0, q_eq, 0, 0, 0, 0], params))
    error = _swing(params, arm, 1e-3, 2.0, scheme=IntegratorKind.SEMI_IMPLICIT_EULER)
    assert error < 0.05 * swing


def test_base_constraints_hold_along_integration(params):
    model = BaseDynamicsModel(params, PAINT_SEED)
    base = MobileBaseState(np.zeros(bk.N_COORDINATES), [0.2, 0.1])
    for k in range(100):
        _, base = integrate_step(None, base, None, [1.5, -0.5], 0.01, params, base_model=model, t=k * 0.01)
        assert bk.constraint_residual(base.q, base.velocity(params), params) < 1e-10


# -- control ----------------------------------------------------------------------------

def test_zero_tracking_error_gives_inverse_dynamics(params, rng):
    for _ in range(5):
        q, qd, qdd = rng.uniform(-np.pi, np.pi, size=6), rng.normal(size=6), rng.normal(size=6)
        expected = arm_inverse_dynamics_lagrange(q, qd, qdd, None, None, params, include_rotor=True)
        ref = JointReference(q, qd, qdd)
        np.testing.assert_allclose(computed_torque_control(ref, q, qd, GAINS_P, GAINS_D, params),
                                   expected, rtol=1e-6, atol=1e-6)
        np.testing.assert_allclose(computed_torque_control(ref, q, qd, GAINS_P, GAINS_D, params, use_lagrange=True),
                                   expected, rtol=1e-12, atol=1e-12)


def test_tracking_error_decays_critically(params):
    ref = JointReference.hold(PAINT_SEED)
    e0 = 0.05
    arm = ArmState(PAINT_SEED + np.array([0.0, e0, 0.0, 0.0, 0.0, 0.0]), np.zeros(6))
    dt = 2e-4
    errors = {}
    for k in range(1000):
        torque = computed_torque_control(ref, arm.q, arm.qd, GAINS_P, GAINS_D, params)
        arm, _ = integrate_step(arm, None, torque, None, dt, params, t=k * dt)
        if k + 1 in (250, 1000):
            errors[k + 1] = arm.q - PAINT_SEED
    for steps, error in errors.items():
        t = steps * dt
        expected = e0 * (1.0 + 20.0 * t) * math.exp(-20.0 * t)
        assert abs(error[1] - expected) < 0.02 * e0
        assert np.abs(np.delete(error, 1)).max() < 0.02 * e0


def test_spray_disturbance_tracking_under_five_millimetres(params):
    disturbance = SprayDisturbance.from_rng(params.spray, np.random.default_rng(3))

    def external(t, q):
        return disturbance.joint_torque(q, t, params)

    ref = JointReference.hold(PAINT_SEED)
    target = arm_fk(PAINT_SEED, params).translation
    arm = ArmState(PAINT_SEED, np.zeros(6))
    dt = 1e-3
    worst = 0.0
    for k in range(300):
        torque = computed_torque_control(ref, arm.q, arm.qd, GAINS_P, GAINS_D, params, spraying=True)
        arm, _ = integrate_step(arm, None, torque, None, dt, params, t=k * dt, external=external)
        worst = max(worst, float(np.linalg.norm(arm_fk(arm.q, params).translation - target)))
    assert worst < 5e-3


# -- arm tracking -----------------------------------------------------------------------

@pytest.mark.parametrize("aim,roll", [((0.0, -1.0, 0.0), 0.0), ((0.3, -0.9, 0.2), 0.7), ((0.0, 0.0, -1.0), 1.2)])
def test_tool_rotation_is_a_rotation_along_the_aim(aim, roll):
    R = tool_rotation(aim, roll)
    np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0)
    np.testing.assert_allclose(R[:, 2], np.asarray(aim) / np.linalg.norm(aim), atol=1e-12)


def test_tool_rotation_x_axis_horizontal_at_zero_roll():
    R = tool_rotation((0.3, -0.9, 0.2), 0.0)
    assert R[2, 0] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("pose", ["paint", "refill"])
def test_tool_rotation_reproduces_arm_orientation(params, pose):
    if pose == "paint":
        q = PAINT_SEED
    else:
        q = ArmTracker(params).solve(TipTarget(REFILL_TIP, 0.0, DOWN_AIM))
    tip = _tip_target(params, q)
    np.testing.assert_allclose(tool_rotation(tip.aim, tip.roll), arm_fk(q, params).rotation, atol=1e-9)


@pytest.mark.parametrize("aim,roll", [((0.0, 0.0, -1.0), 0.0), ((0.0, 0.0, -1.0), -2.1), ((0.0, 0.0, 1.0), 0.4),
                                      ((0.3, -0.9, 0.2), 0.7)])
def test_tool_aim_roll_inverts_tool_rotation(aim, roll):
    recovered_aim, recovered_roll = tool_aim_roll(tool_rotation(aim, roll))
    np.testing.assert_allclose(recovered_aim, np.asarray(aim) / np.linalg.norm(aim), atol=1e-12)
    assert recovered_roll == pytest.approx(roll, abs=1e-12)


def test_vertical_aim_falls_back_to_world_x():
    x0, y0, z = tool_frame(DOWN_AIM)
    np.testing.assert_allclose(x0, [1.0, 0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(np.cross(x0, y0), z, atol=1e-12)


def test_tracker_needs_a_knot(params):
    with pytest.raises(RuntimeError):
        ArmTracker(params).reference(0.0)


def test_tracker_replays_one_tick_late(params):
    tracker = ArmTracker(params)
    tip0 = _tip_target(params, PAINT_SEED)
    q0 = tracker.start(tip0, 0.0)
    np.testing.assert_allclose(arm_fk(q0, params).translation + params.geometry.arm_mount, tip0.position, atol=1e-5)
    hold = tracker.reference(0.01)
    np.testing.assert_allclose(hold.q, q0)
    np.testing.assert_allclose(hold.qd, 0.0)

    raised = (tip0.position[0], tip0.position[1], tip0.position[2] + 0.02)
    tip1 = TipTarget(raised, tip0.roll, tip0.aim)
    tracker.push(tip1, 0.05)

    start = tracker.reference(0.05)
    np.testing.assert_allclose(start.q, q0, atol=1e-12)
    np.testing.assert_allclose(start.qd, 0.0, atol=1e-12)
    end = tracker.reference(0.10)
    np.testing.assert_allclose(arm_fk(end.q, params).translation + params.geometry.arm_mount, raised, atol=1e-5)
    # clamped past the end of the segment
    np.testing.assert_allclose(tracker.reference(0.5).q, end.q)

    with pytest.raises(ValueError):
        tracker.push(tip1, 0.05)


# -- missions ---------------------------------------------------------------------------

def _short_config(**changes):
    config = dict(seed=11, dynamics_mode=DynamicsMode.KINEMATIC, user_events=[UserEvent(t=15.0, action="stop")])
    config.update(changes)
    return SimConfig(**config)


def test_user_stop_ends_without_failure(params):
    room = room_from_document(SMALL_ROOM)
    result = run_mission(params, room, _short_config())
    report = result.report
    assert not report.success
    assert report.stop_reason == USER_STOP
    assert report.total_time == pytest.approx(15.0, abs=0.06)
    assert result.trace[-1].phase is MissionPhase.TERMINATED


def test_user_pause_and_resume_are_reported(params):
    room = room_from_document(SMALL_ROOM)
    events = [UserEvent(t=2.0, action="pause"), UserEvent(t=4.0, action="resume"), UserEvent(t=6.0, action="stop")]
    report = run_mission(params, room, _short_config(user_events=events)).report
    user = [e for e in report.pause_events if e.reason is PauseReason.USER]
    assert len(user) == 1
    assert user[0].t_start == pytest.approx(2.0, abs=0.06)
    assert user[0].t_end == pytest.approx(4.0, abs=0.06)


def test_same_seed_gives_identical_report(params):
    room = room_from_document(SMALL_ROOM)
    first = run_mission(params, room, _short_config())
    second = run_mission(params, room, _short_config())
    assert first.report.model_dump() == second.report.model_dump()
    assert [r.model_dump_json() for r in first.trace] == [r.model_dump_json() for r in second.trace]


def test_duration_cap_fails_with_partial_report(params):
    room = room_from_document(SMALL_ROOM)
    with pytest.raises(MissionFailed) as info:
        run_mission(params, room, _short_config(user_events=[], duration_cap=5.0))
    assert "duration cap" in info.value.reason
    assert info.value.report.total_time == pytest.approx(5.0, abs=0.06)
    assert not info.value.report.success


def test_report_lists_opening_area(params, door_room):
    config = _short_config(user_events=[UserEvent(t=1.0, action="stop")])
    report = run_mission(params, door_room, config).report
    assert report.opening_area == pytest.approx(0.9 * 2.1 + 1.2 * 1.2)
    assert report.paintable_area == pytest.approx(report.wall_area - report.opening_area, abs=1e-9)


@pytest.fixture(scope="module")
def nominal_mission(params, empty_room):
    return run_mission(params, empty_room, SimConfig(seed=7, dynamics_mode=DynamicsMode.KINEMATIC))


@pytest.mark.slow
def test_nominal_mission_covers_the_room(nominal_mission):
    report = nominal_mission.report
    assert report.success
    assert report.stop_reason == NORMAL_STOP
    assert report.covered_fraction >= 0.995
    assert report.paintable_area == pytest.approx(4 * 4.0 * 2.7)
    assert report.phase_entries[MissionPhase.PAINT_OUTLINE.value] == 4
    assert report.phase_entries[MissionPhase.REGISTER_WORLD_FRAME.value] == 1


@pytest.mark.slow
def test_nominal_mission_rates_and_arithmetic(nominal_mission):
    report = nominal_mission.report
    assert report.rates.core >= 200.0
    painted = report.rates.painting * report.total_time / 3600.0
    assert painted == pytest.approx(report.painted_area, rel=1e-9)
    assert report.painting_time <= report.total_time


@pytest.mark.slow
def test_nominal_mission_localization(nominal_mission):
    assert nominal_mission.report.localization.max_error <= 0.05


@pytest.mark.slow
def test_nominal_mission_sprays_only_while_painting(nominal_mission):
    assert not [r for r in nominal_mission.trace if r.spray and r.phase not in PAINTING_PHASES]
    for event in nominal_mission.report.pause_events:
        assert event.t_end is not None and event.t_end >= event.t_start


@pytest.mark.slow
def test_dead_reckoning_alone_drifts_further(params, empty_room, nominal_mission):
    config = SimConfig(seed=7, dynamics_mode=DynamicsMode.KINEMATIC, corrections=False)
    try:
        drifted = run_mission(params, empty_room, config)
    except MissionFailed as exc:
        drifted = exc.result
    slope, early, late = drift_trend(drifted.trace)
    assert slope > 0.0
    assert late > 2.0 * early
    assert drifted.report.localization.final_error > nominal_mission.report.localization.max_error

    corrected_late = drift_trend(nominal_mission.trace)[2]
    assert corrected_late < late


def test_drift_trend_reads_growth_from_the_trace():
    records = [
        TraceRecord(t=float(k), phase=MissionPhase.ADVANCE_POST, true_pose=(0.01 * k, 0.0, 0.0),
                    est_pose=(0.0, 0.0, 0.0), u_b=(0.0, 0.0), spray=False, paint_level=1.0)
        for k in range(8)
    ]
    slope, early, late = drift_trend(records)
    assert slope == pytest.approx(0.01)
    assert early == pytest.approx(0.005)
    assert late == pytest.approx(0.065)


@pytest.mark.slow
def test_full_dynamics_keeps_constraints_and_tracks(params):
    room = room_from_document(SMALL_ROOM)
    config = SimConfig(seed=5, dynamics_mode=DynamicsMode.FULL, dt=5e-3, duration_cap=30.0)
    with pytest.raises(MissionFailed) as info:
        run_mission(params, room, config)
    result = info.value.result
    report = result.report
    assert report.power.arm_time > 0.0
    assert report.max_constraint_residual is not None
    assert report.max_constraint_residual < 1e-10
    assert report.max_tracking_error < 0.01
    assert result.joint_log.shape[1] == len(JOINT_LOG_COLUMNS)
    assert len(result.joint_log) > 0

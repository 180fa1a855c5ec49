import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from services.kinematics import (
    CastorSingularity,
    KKRow,
    NoConvergence,
    Transform,
    arm_fk,
    arm_fk_matrix,
    arm_ik,
    arm_ik_position,
    arm_jacobian,
    arm_tip_positions,
    base_constraint_matrix,
    base_mobility_matrix,
    base_mobility_matrix_rate,
    compose,
    constraint_residual,
    kk_inverse_transform,
    kk_transform,
    lift_velocity,
    max_tip_height,
    planar_reach,
    wheel_rates,
)
from services.kinematics import base_kinematics as bk
from services.params import replace_symbol


def _random_base_state(rng):
    q = rng.uniform(-np.pi, np.pi, size=9)
    q[:2] = rng.uniform(-3.0, 3.0, size=2)
    return q


def _reference_matrix(row, q):
    """RotX(alpha) TransX(d) RotZ(theta) TransZ(r) as four explicit factors"""
    ca, sa = np.cos(row.alpha), np.sin(row.alpha)
    theta = row.theta_offset + (q if row.actuated else 0.0)
    ct, st = np.cos(theta), np.sin(theta)
    rot_x = np.array([[1, 0, 0, 0], [0, ca, -sa, 0], [0, sa, ca, 0], [0, 0, 0, 1]])
    trans_x = np.eye(4)
    trans_x[0, 3] = row.d
    rot_z = np.array([[ct, -st, 0, 0], [st, ct, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    trans_z = np.eye(4)
    trans_z[2, 3] = row.r
    return rot_x @ trans_x @ rot_z @ trans_z


# -- transforms -----------------------------------------------------------------------

def test_zero_row_is_identity():
    np.testing.assert_allclose(kk_transform(KKRow(0.0, 0.0, 0.0, 0.0, 1), 0.0).matrix(), np.eye(4))


def test_shoulder_row_translation(params):
    row = params.geometry.kk_table[1]
    flipped = KKRow(np.pi / 2, row.d, 0.0, row.r, 2)
    transform = kk_transform(flipped, 0.0)
    np.testing.assert_allclose(transform.translation, [0.0784, -0.0644, 0.0], atol=1e-12)
    np.testing.assert_allclose(transform.rotation, Rotation.from_euler("x", np.pi / 2).as_matrix(), atol=1e-12)


def test_inverse_row_composes_to_identity(params, rng):
    for row in params.geometry.kk_table:
        q = rng.uniform(-np.pi, np.pi)
        product = kk_transform(row, q) @ kk_inverse_transform(row, q)
        np.testing.assert_allclose(product.matrix(), np.eye(4), atol=1e-12)


def test_long_composition_stays_orthonormal(rng):
    steps = [Transform(Rotation.from_rotvec(rng.normal(size=3)).as_matrix(), rng.normal(size=3))
             for _ in range(10_000)]
    assert compose(steps).is_orthonormal(1e-12)


def test_drifted_rotation_is_repaired():
    drifted = np.eye(3) + 1e-6
    assert Transform(drifted, np.zeros(3)).is_orthonormal(1e-12)


# -- arm ------------------------------------------------------------------------------

def test_fk_matches_one_shot_product(params, rng):
    for _ in range(50):
        q = rng.uniform(-np.pi, np.pi, size=6)
        np.testing.assert_allclose(arm_fk(q, params).matrix(), arm_fk_matrix(q, params), atol=1e-12)


def test_fk_at_zero_matches_independent_chain(params):
    expected = np.eye(4)
    for row in params.geometry.kk_table:
        expected = expected @ _reference_matrix(row, 0.0)
    np.testing.assert_allclose(arm_fk(np.zeros(6), params).matrix(), expected, atol=1e-12)


def test_batched_tip_positions(params, rng):
    batch = rng.uniform(-np.pi, np.pi, size=(20, 6))
    expected = np.array([arm_fk(q, params).translation for q in batch])
    np.testing.assert_allclose(arm_tip_positions(batch, params), expected, atol=1e-12)


def test_jacobian_matches_finite_differences(params, rng):
    h = 1e-6
    for _ in range(100):
        q = rng.uniform(-np.pi, np.pi, size=6)
        jacobian = arm_jacobian(q, params)
        base = arm_fk(q, params)
        for j in range(6):
            dq = np.zeros(6)
            dq[j] = h
            plus, minus = arm_fk(q + dq, params), arm_fk(q - dq, params)
            linear = (plus.translation - minus.translation) / (2 * h)
            angular = (Rotation.from_matrix(plus.rotation @ base.rotation.T).as_rotvec()
                       - Rotation.from_matrix(minus.rotation @ base.rotation.T).as_rotvec()) / (2 * h)
            np.testing.assert_allclose(jacobian[:3, j], linear, atol=1e-6)
            np.testing.assert_allclose(jacobian[3:, j], angular, atol=1e-6)


def test_last_joint_column_is_perpendicular_to_its_axis(params, rng):
    q = rng.uniform(-np.pi, np.pi, size=6)
    jacobian = arm_jacobian(q, params)
    assert abs(np.dot(jacobian[:3, 5], jacobian[3:, 5])) < 1e-12


def test_stretched_pose_is_singular(params):
    assert np.linalg.matrix_rank(arm_jacobian(np.zeros(6), params), tol=1e-8) < 6


def test_elbow_plane_reach(params):
    assert planar_reach(np.zeros(6), params) == pytest.approx(1.29, abs=1e-9)
    assert planar_reach([0.3, -0.4, 0.0, 1.0, 0.2, 0.5], params) == pytest.approx(1.29, abs=1e-9)
    assert planar_reach([0.0, 0.0, 0.8, 0.0, 0.0, 0.0], params) < 1.29


def test_ik_fixed_point(params):
    q0 = np.array([0.2, -0.6, 1.1, 0.3, -0.7, 0.4])
    np.testing.assert_allclose(arm_ik(arm_fk(q0, params), q0, params), q0, atol=1e-12)


def test_ik_recovers_perturbed_pose(params, rng):
    q0 = np.array([0.2, -0.6, 1.1, 0.3, -0.7, 0.4])
    target = arm_fk(q0 + 0.05 * rng.normal(size=6), params)
    solution = arm_fk(arm_ik(target, q0, params), params)
    np.testing.assert_allclose(solution.translation, target.translation, atol=1e-6)
    rotation_error = Rotation.from_matrix(solution.rotation @ target.rotation.T).magnitude()
    assert rotation_error < 1e-6


def test_ik_rejects_unreachable_target(params):
    target = Transform(np.eye(3), np.array([0.0, 0.0, 3.5]))
    with pytest.raises(NoConvergence) as info:
        arm_ik(target, np.zeros(6), params, max_iterations=100)
    assert info.value.residual > 0.5


def test_position_ik_with_secondary_orientation(params):
    seed = np.array([0.0, -0.8, 1.4, 0.0, -0.6, 0.0])
    goal = arm_fk(seed + 0.1, params)
    q = arm_ik_position(goal.translation, seed, params, target_rotation=goal.rotation)
    np.testing.assert_allclose(arm_fk(q, params).translation, goal.translation, atol=1e-6)


@pytest.mark.slow
def test_reach_sweep_height(params, rng):
    height, q = max_tip_height(params, rng, n_samples=200_000)
    assert height == pytest.approx(2.70, abs=0.05)
    assert arm_fk(q, params).translation[2] == pytest.approx(height, abs=1e-9)


# -- base -----------------------------------------------------------------------------

def test_constraints_vanish_on_mobility(params, rng):
    worst = 0.0
    for _ in range(1000):
        q = _random_base_state(rng)
        worst = max(worst, np.max(np.abs(base_constraint_matrix(q, params) @ base_mobility_matrix(q, params))))
    assert worst < 1e-12


def test_null_space_is_two_dimensional(params, rng):
    for _ in range(20):
        q = _random_base_state(rng)
        J = base_constraint_matrix(q, params)
        assert J.shape == (7, 9)
        assert np.linalg.matrix_rank(J) == 7
        assert np.linalg.matrix_rank(base_mobility_matrix(q, params)) == 2


def test_straight_motion(params):
    qd = lift_velocity(np.zeros(9), [1.0, 0.0], params)
    assert qd[bk.X] == pytest.approx(1.0)
    assert qd[bk.Y] == pytest.approx(0.0)
    assert qd[bk.WHEEL1] == pytest.approx(3.937, abs=1e-3)
    assert qd[bk.WHEEL2] == pytest.approx(3.937, abs=1e-3)
    assert qd[bk.BETA1] == pytest.approx(0.0)
    assert constraint_residual(np.zeros(9), qd, params) < 1e-12


def test_spin_in_place_counter_rotates_wheels(params):
    qd = lift_velocity(np.zeros(9), [0.0, 0.7], params)
    assert qd[bk.WHEEL1] == pytest.approx(-qd[bk.WHEEL2])
    np.testing.assert_allclose(wheel_rates(np.array([0.0, 0.7]), params), qd[[bk.WHEEL1, bk.WHEEL2]])


def test_lateral_slip_is_detected(params):
    qd = np.zeros(9)
    qd[bk.Y] = 1.0
    assert constraint_residual(np.zeros(9), qd, params) > 0.5


def test_wheel_rates_invert(params):
    u = np.array([0.4, -0.3])
    np.testing.assert_allclose(bk.mobility_from_wheel_rates(wheel_rates(u, params), params), u)


def test_mobility_rate_matches_finite_difference(params, rng):
    h = 1e-6
    for _ in range(50):
        q = _random_base_state(rng)
        qd = base_mobility_matrix(q, params) @ rng.normal(size=2)
        numeric = (base_mobility_matrix(q + h * qd, params) - base_mobility_matrix(q - h * qd, params)) / (2 * h)
        np.testing.assert_allclose(base_mobility_matrix_rate(q, qd, params), numeric, atol=1e-6)


def test_zero_trail_castor_is_singular(params):
    with pytest.raises(CastorSingularity):
        base_mobility_matrix(np.zeros(9), replace_symbol(params, "d", 0.0))

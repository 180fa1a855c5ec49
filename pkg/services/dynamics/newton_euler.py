"""Recursive Newton-Euler inverse dynamics over the Khalil-Kleinfinger chain.

Independent of the Lagrangian path in arm_dynamics: it never forms M or C.
Gravity enters as an upward acceleration of frame 0.
"""
from typing import Optional, Sequence

import numpy as np

from services.kinematics.transforms import kk_transform
from services.params.params_schema import RobotParams

Z_AXIS = np.array([0.0, 0.0, 1.0])


def arm_inverse_dynamics_newton_euler(
    q_a: Sequence[float],
    qd_a: Sequence[float],
    qdd_a: Sequence[float],
    params: RobotParams,
    gravity: Optional[float] = None,
    tip_force: Optional[np.ndarray] = None,
    tip_moment: Optional[np.ndarray] = None,
    include_rotor: bool = False,
) -> np.ndarray:
    """Joint torques; tip_force/tip_moment are applied by the environment, in frame 0"""
    q_a = np.asarray(q_a, dtype=float)
    qd_a = np.asarray(qd_a, dtype=float)
    qdd_a = np.asarray(qdd_a, dtype=float)
    g = params.dynamics.gravity if gravity is None else gravity

    rows = params.geometry.kk_table
    transforms = [kk_transform(row, q_a[row.joint_index - 1] if row.actuated else 0.0) for row in rows]
    n_frames = len(rows)

    # forward recursion: velocities and accelerations of every frame, in its own axes
    omega = np.zeros(3)
    omega_dot = np.zeros(3)
    accel = np.array([0.0, 0.0, g])
    forces = [np.zeros(3)] * n_frames
    moments = [np.zeros(3)] * n_frames
    rotation_to_world = np.eye(3)
    for index, (row, transform) in enumerate(zip(rows, transforms)):
        rt = transform.rotation.T
        p = transform.translation
        accel = rt @ (accel + np.cross(omega_dot, p) + np.cross(omega, np.cross(omega, p)))
        omega_parent = rt @ omega
        if row.actuated:
            j = row.joint_index - 1
            omega = omega_parent + qd_a[j] * Z_AXIS
            omega_dot = rt @ omega_dot + qdd_a[j] * Z_AXIS + np.cross(omega_parent, qd_a[j] * Z_AXIS)
        else:
            omega = omega_parent
            omega_dot = rt @ omega_dot
        rotation_to_world = rotation_to_world @ transform.rotation
        if row.actuated:
            link = params.arm_links[row.joint_index - 1]
            c = link.cg
            accel_cg = accel + np.cross(omega_dot, c) + np.cross(omega, np.cross(omega, c))
            forces[index] = link.mass * accel_cg
            moments[index] = link.inertia @ omega_dot + np.cross(omega, link.inertia @ omega)

    # backward recursion
    f = np.zeros(3)
    n = np.zeros(3)
    if tip_force is not None:
        f = -rotation_to_world.T @ np.asarray(tip_force, dtype=float)
    if tip_moment is not None:
        n = -rotation_to_world.T @ np.asarray(tip_moment, dtype=float)
    torques = np.zeros(6)
    for index in range(n_frames - 1, -1, -1):
        row = rows[index]
        if index + 1 < n_frames:
            child = transforms[index + 1]
            f_child = child.rotation @ f
            n = child.rotation @ n + np.cross(child.translation, f_child)
            f = f_child
        if row.actuated:
            link = params.arm_links[row.joint_index - 1]
            n = n + moments[index] + np.cross(link.cg, forces[index])
            f = f + forces[index]
            torques[row.joint_index - 1] = n @ Z_AXIS
    if include_rotor:
        torques = torques + params.arm_rotor_inertia * qdd_a
    return torques

"""Computed-torque arm control and mobility-velocity base control."""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from services.dynamics import (
    BaseDynamicsModel,
    FrictionCoefficients,
    arm_inverse_dynamics_lagrange,
    arm_inverse_dynamics_newton_euler,
    friction_torque,
)
from services.kinematics import arm_fk, arm_jacobian
from services.params.params_schema import RobotParams


@dataclass(frozen=True)
class JointReference:
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray

    @classmethod
    def hold(cls, q: Sequence[float]) -> 'JointReference':
        q = np.asarray(q, dtype=float)
        return cls(q.copy(), np.zeros_like(q), np.zeros_like(q))


def spray_reaction_feedforward(q: Sequence[float], params: RobotParams) -> np.ndarray:
    """Joint torques cancelling the nominal axial reaction of the gun"""
    tool = arm_fk(q, params)
    force = -params.spray.reaction_force * tool.rotation[:, 2]
    return -arm_jacobian(q, params)[:3].T @ force


def computed_torque_control(
    ref: JointReference,
    q: Sequence[float],
    qd: Sequence[float],
    kp: Sequence[float],
    kd: Sequence[float],
    params: RobotParams,
    friction: Optional[FrictionCoefficients] = None,
    spraying: bool = False,
    use_lagrange: bool = False,
) -> np.ndarray:
    """Gamma = ID(q, qd, qdd_ref + Kd e_dot + Kp e) + friction + reaction feed-forward.

    The Lagrange and Newton-Euler models agree; Newton-Euler is the cheap default.
    """
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    a = ref.qdd + np.asarray(kd) * (ref.qd - qd) + np.asarray(kp) * (ref.q - q)
    if use_lagrange:
        torque = arm_inverse_dynamics_lagrange(q, qd, a, None, None, params, include_rotor=True)
    else:
        torque = arm_inverse_dynamics_newton_euler(q, qd, a, params, include_rotor=True)
    if friction is not None:
        torque = torque + friction_torque(qd, friction)
    if spraying:
        torque = torque + spray_reaction_feedforward(q, params)
    return torque


def base_velocity_control(
    model: BaseDynamicsModel,
    q_b: np.ndarray,
    u: np.ndarray,
    u_ref: Sequence[float],
    gain: float,
    u_ref_dot: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """Wheel torques driving u toward u_ref with first-order error decay"""
    u_dot = gain * (np.asarray(u_ref, dtype=float) - u)
    if u_ref_dot is not None:
        u_dot = u_dot + np.asarray(u_ref_dot, dtype=float)
    return model.wheel_torques_for(q_b, u, u_dot)

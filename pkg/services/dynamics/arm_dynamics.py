"""Lagrangian model of the painting arm: M_a(q) qdd + C_a(q, qd) qd + Q(q) + G_fr + G_ex = G_a."""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from services.kinematics.arm_kinematics import link_jacobians
from services.params.params_schema import DynamicsDefaults, MotorParams, RobotParams
from .christoffel import christoffel_coriolis
from .exceptions import SingularInertia
from .newton_euler import arm_inverse_dynamics_newton_euler

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class FrictionCoefficients:
    viscous: float = 0.1
    coulomb: float = 0.05
    epsilon: float = 1e-3

    @classmethod
    def from_defaults(cls, defaults: DynamicsDefaults) -> 'FrictionCoefficients':
        return cls(defaults.viscous_friction, defaults.coulomb_friction, defaults.friction_epsilon)


def _gravity(params: RobotParams, gravity: Optional[float]) -> float:
    return params.dynamics.gravity if gravity is None else gravity


def arm_mass_matrix(q_a: Sequence[float], params: RobotParams, include_rotor: bool = False) -> np.ndarray:
    """sum_i m_i Jv_i^T Jv_i + Jw_i^T R_i I_i R_i^T Jw_i"""
    M = np.zeros((6, 6))
    for link, (jv, jw, frame) in zip(params.arm_links, link_jacobians(q_a, params)):
        inertia_world = frame.rotation @ link.inertia @ frame.rotation.T
        M += link.mass * jv.T @ jv + jw.T @ inertia_world @ jw
    M = 0.5 * (M + M.T)
    if include_rotor:
        M += np.diag(params.arm_rotor_inertia)
    return M


def arm_potential_energy(q_a: Sequence[float], params: RobotParams, gravity: Optional[float] = None) -> float:
    g = _gravity(params, gravity)
    total = 0.0
    for link, (_, _, frame) in zip(params.arm_links, link_jacobians(q_a, params)):
        total += link.mass * g * frame.apply(link.cg)[2]
    return total


def arm_gravity(q_a: Sequence[float], params: RobotParams, gravity: Optional[float] = None) -> np.ndarray:
    """Q_j = dU/dq_j = sum_i m_i g Jv_i[z, j]"""
    g = _gravity(params, gravity)
    Q = np.zeros(6)
    for link, (jv, _, _) in zip(params.arm_links, link_jacobians(q_a, params)):
        Q += link.mass * g * jv[2]
    return Q


def arm_coriolis(q_a: Sequence[float], qd_a: Sequence[float], params: RobotParams) -> np.ndarray:
    return christoffel_coriolis(lambda q: arm_mass_matrix(q, params), np.asarray(q_a, dtype=float), qd_a)


def arm_kinetic_energy(q_a: Sequence[float], qd_a: Sequence[float], params: RobotParams,
                       include_rotor: bool = False) -> float:
    qd_a = np.asarray(qd_a, dtype=float)
    return float(0.5 * qd_a @ arm_mass_matrix(q_a, params, include_rotor) @ qd_a)


def arm_energy(q_a: Sequence[float], qd_a: Sequence[float], params: RobotParams,
               include_rotor: bool = False, gravity: Optional[float] = None) -> float:
    """Total mechanical energy T + U"""
    return arm_kinetic_energy(q_a, qd_a, params, include_rotor) + arm_potential_energy(q_a, params, gravity)


def friction_torque(qd_a: Sequence[float], coeffs: FrictionCoefficients = FrictionCoefficients()) -> np.ndarray:
    """Viscous plus smoothed Coulomb friction"""
    qd_a = np.asarray(qd_a, dtype=float)
    return coeffs.viscous * qd_a + coeffs.coulomb * np.tanh(qd_a / coeffs.epsilon)


def actuator_torque(current: float, motor: MotorParams) -> float:
    return motor.torque_constant * current


def arm_inverse_dynamics_lagrange(
    q_a: Sequence[float],
    qd_a: Sequence[float],
    qdd_a: Sequence[float],
    friction: Optional[Sequence[float]],
    external: Optional[Sequence[float]],
    params: RobotParams,
    include_rotor: bool = True,
    gravity: Optional[float] = None,
) -> np.ndarray:
    q_a = np.asarray(q_a, dtype=float)
    qd_a = np.asarray(qd_a, dtype=float)
    qdd_a = np.asarray(qdd_a, dtype=float)
    torque = (
        arm_mass_matrix(q_a, params, include_rotor) @ qdd_a
        + arm_coriolis(q_a, qd_a, params) @ qd_a
        + arm_gravity(q_a, params, gravity)
    )
    if friction is not None:
        torque = torque + np.asarray(friction, dtype=float)
    if external is not None:
        torque = torque + np.asarray(external, dtype=float)
    return torque


def _solve(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    condition = np.linalg.cond(M)
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        raise SingularInertia(condition)
    return np.linalg.solve(M, rhs)


def arm_forward_dynamics(
    q_a: Sequence[float],
    qd_a: Sequence[float],
    torque: Sequence[float],
    friction: Optional[Sequence[float]],
    external: Optional[Sequence[float]],
    params: RobotParams,
    include_rotor: bool = True,
    gravity: Optional[float] = None,
    free_joints: Optional[Sequence[int]] = None,
    fast: bool = False,
) -> np.ndarray:
    """qdd = (M_a + diag(Ia))^-1 (G_a - C_a qd - Q - G_fr - G_ex).

    fast=True takes C_a qd + Q from one Newton-Euler pass instead of the
    Christoffel construction. free_joints locks every other joint (qdd = 0).
    """
    q_a = np.asarray(q_a, dtype=float)
    qd_a = np.asarray(qd_a, dtype=float)
    if fast:
        bias = arm_inverse_dynamics_newton_euler(q_a, qd_a, np.zeros(6), params, gravity=gravity)
    else:
        bias = arm_coriolis(q_a, qd_a, params) @ qd_a + arm_gravity(q_a, params, gravity)
    rhs = np.asarray(torque, dtype=float) - bias
    if friction is not None:
        rhs = rhs - np.asarray(friction, dtype=float)
    if external is not None:
        rhs = rhs - np.asarray(external, dtype=float)
    M = arm_mass_matrix(q_a, params, include_rotor)
    if free_joints is None:
        return _solve(M, rhs)
    index = np.asarray(sorted(free_joints), dtype=int)
    qdd = np.zeros(6)
    qdd[index] = _solve(M[np.ix_(index, index)], rhs[index])
    return qdd


def arm_lumped_body(q_a: Sequence[float], params: RobotParams) -> Tuple[float, np.ndarray, np.ndarray]:
    """Arm frozen at q_a as one rigid body: (mass, C.G., inertia about the C.G.) in frame 0"""
    pieces = []
    for link, (_, _, frame) in zip(params.arm_links, link_jacobians(q_a, params)):
        pieces.append((link.mass, frame.apply(link.cg), frame.rotation @ link.inertia @ frame.rotation.T))
    return combine_bodies(pieces)


def combine_bodies(pieces: Sequence[Tuple[float, np.ndarray, np.ndarray]]) -> Tuple[float, np.ndarray, np.ndarray]:
    """Composite mass, C.G. and inertia about the composite C.G. (parallel-axis theorem)"""
    mass = sum(m for m, _, _ in pieces)
    cg = sum(m * c for m, c, _ in pieces) / mass
    inertia = np.zeros((3, 3))
    for m, c, tensor in pieces:
        r = c - cg
        inertia += tensor + m * (np.dot(r, r) * np.eye(3) - np.outer(r, r))
    return mass, cg, inertia

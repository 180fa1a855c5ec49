"""Lagrangian model of the mobile base under nonholonomic constraints.

    M_b(q) qdd + C_b(q, qd) qd = G_b + J(q)^T lambda

and its reduction to the controllable mobility u_b with qd = S_b(q) u_b:

    M~ u_dot + C~ u = S_b^T G_b,   M~ = S^T M S,   C~ = S^T M S_dot + S^T C S

The arm is lumped with the base link as one rigid body frozen at a given
arm configuration.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from services.kinematics import base_kinematics as bk
from services.kinematics.transforms import rot_x, rot_z
from services.params.params_schema import RobotParams
from .arm_dynamics import arm_lumped_body, combine_bodies
from .christoffel import christoffel_coriolis, mass_matrix_rate
from .exceptions import RankDeficient, SingularInertia

logger = logging.getLogger(__name__)

E_X = np.array([1.0, 0.0, 0.0])
E_Y = np.array([0.0, 1.0, 0.0])
E_Z = np.array([0.0, 0.0, 1.0])
AXLE = rot_x(-np.pi / 2)  # wheel z axis along base +y; positive spin rolls forward


@dataclass(frozen=True)
class BaseDynamics:
    """Base model evaluated at one state"""
    M_b: np.ndarray
    C_b: np.ndarray
    M_reduced: np.ndarray
    C_reduced: np.ndarray
    torque: np.ndarray


@dataclass(frozen=True)
class _BodyTerms:
    mass: float
    inertia_world: np.ndarray
    jv: np.ndarray
    jw: np.ndarray


class BaseDynamicsModel:
    """Base dynamics with the arm frozen at arm_config"""

    def __init__(self, params: RobotParams, arm_config: Optional[Sequence[float]] = None):
        self.params = params
        self.arm_config = np.zeros(6) if arm_config is None else np.asarray(arm_config, dtype=float)
        base = params.base_link
        arm_mass, arm_cg, arm_inertia = arm_lumped_body(self.arm_config, params)
        self.chassis = combine_bodies([
            (base.mass, np.asarray(base.cg), np.asarray(base.inertia)),
            (arm_mass, arm_cg + params.geometry.arm_mount, arm_inertia),
        ])
        logger.debug("Base model chassis mass %.3f kg, C.G. %s", self.chassis[0], np.round(self.chassis[1], 4))

    # -- kinematics of every rigid body -------------------------------------------------

    def _bodies(self, q: np.ndarray) -> List[_BodyTerms]:
        g = self.params.geometry
        phi = q[bk.PHI]
        R_phi = rot_z(phi)
        bodies = []

        def terms(mass, inertia, R_body_base, position_base, extra_v, extra_w):
            jv = np.zeros((3, bk.N_COORDINATES))
            jw = np.zeros((3, bk.N_COORDINATES))
            jv[:, bk.X] = E_X
            jv[:, bk.Y] = E_Y
            jv[:, bk.PHI] = np.cross(E_Z, R_phi @ position_base)
            jw[:, bk.PHI] = E_Z
            for index, column in extra_v.items():
                jv[:, index] = R_phi @ column
            for index, column in extra_w.items():
                jw[:, index] = R_phi @ column
            R = R_phi @ R_body_base
            return _BodyTerms(mass, R @ inertia @ R.T, jv, jw)

        chassis_mass, chassis_cg, chassis_inertia = self.chassis
        bodies.append(terms(chassis_mass, chassis_inertia, np.eye(3), chassis_cg, {}, {}))

        wheel = self.params.fixed_wheel
        for index, y in ((bk.WHEEL1, -g.b), (bk.WHEEL2, g.b)):
            R_body = AXLE @ rot_z(q[index])
            offset = R_body @ wheel.cg
            bodies.append(terms(
                wheel.mass, wheel.inertia, R_body, np.array([0.0, y, g.r_f]) + offset,
                {index: np.cross(E_Y, offset)}, {index: E_Y},
            ))

        hub, castor = self.params.orientable_hub, self.params.castor_wheel
        for i, (hx, hy) in enumerate(bk.castor_mounts(self.params)):
            beta_index, spin_index = bk.BETA1 + i, bk.CASTOR1 + i
            R_beta = rot_z(q[beta_index])
            mount = np.array([hx, hy, g.r_c])

            hub_offset = R_beta @ hub.cg
            bodies.append(terms(
                hub.mass, hub.inertia, R_beta, mount + hub_offset,
                {beta_index: np.cross(E_Z, hub_offset)}, {beta_index: E_Z},
            ))

            trail = R_beta @ np.array([-g.d, 0.0, 0.0])
            R_wheel = R_beta @ AXLE @ rot_z(q[spin_index])
            wheel_offset = R_wheel @ castor.cg
            spin_axis = R_beta @ E_Y
            bodies.append(terms(
                castor.mass, castor.inertia, R_wheel, mount + trail + wheel_offset,
                {beta_index: np.cross(E_Z, trail + wheel_offset), spin_index: np.cross(spin_axis, wheel_offset)},
                {beta_index: E_Z, spin_index: spin_axis},
            ))
        return bodies

    # -- energy and inertia -----------------------------------------------------------

    def kinetic_energy(self, q: np.ndarray, qd: np.ndarray) -> float:
        """Sum of rigid-body kinetic energies plus wheel rotor energy"""
        q, qd = np.asarray(q, dtype=float), np.asarray(qd, dtype=float)
        energy = 0.0
        for body in self._bodies(q):
            v = body.jv @ qd
            w = body.jw @ qd
            energy += 0.5 * body.mass * v @ v + 0.5 * w @ body.inertia_world @ w
        rotor = self.params.wheel_rotor_inertia
        energy += 0.5 * (rotor[0] * qd[bk.WHEEL1] ** 2 + rotor[1] * qd[bk.WHEEL2] ** 2)
        return float(energy)

    def mass_matrix(self, q: np.ndarray) -> np.ndarray:
        """Hessian of the kinetic energy in qd"""
        q = np.asarray(q, dtype=float)
        M = np.zeros((bk.N_COORDINATES, bk.N_COORDINATES))
        for body in self._bodies(q):
            M += body.mass * body.jv.T @ body.jv + body.jw.T @ body.inertia_world @ body.jw
        rotor = self.params.wheel_rotor_inertia
        M[bk.WHEEL1, bk.WHEEL1] += rotor[0]
        M[bk.WHEEL2, bk.WHEEL2] += rotor[1]
        return 0.5 * (M + M.T)

    def coriolis(self, q: np.ndarray, qd: np.ndarray) -> np.ndarray:
        return christoffel_coriolis(self.mass_matrix, np.asarray(q, dtype=float), qd)

    def mass_matrix_rate(self, q: np.ndarray, qd: np.ndarray) -> np.ndarray:
        return mass_matrix_rate(self.mass_matrix, np.asarray(q, dtype=float), qd)

    # -- reduced (controllable mobility) model ----------------------------------------

    def input_matrix(self) -> np.ndarray:
        """Maps the two fixed-wheel torques to generalized forces G_b"""
        E = np.zeros((bk.N_COORDINATES, 2))
        E[bk.WHEEL1, 0] = 1.0
        E[bk.WHEEL2, 1] = 1.0
        return E

    def reduce(self, q: np.ndarray, qd: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        q, qd = np.asarray(q, dtype=float), np.asarray(qd, dtype=float)
        S = bk.base_mobility_matrix(q, self.params)
        S_dot = bk.base_mobility_matrix_rate(q, qd, self.params)
        M = self.mass_matrix(q)
        M_reduced = S.T @ M @ S
        C_reduced = S.T @ M @ S_dot + S.T @ self.coriolis(q, qd) @ S
        return 0.5 * (M_reduced + M_reduced.T), C_reduced

    def mobility_acceleration(self, q: np.ndarray, u: np.ndarray, wheel_torque: np.ndarray) -> np.ndarray:
        """u_dot from the reduced model for given wheel torques"""
        S = bk.base_mobility_matrix(q, self.params)
        M_reduced, C_reduced = self.reduce(q, S @ u)
        rhs = S.T @ self.input_matrix() @ wheel_torque - C_reduced @ u
        condition = np.linalg.cond(M_reduced)
        if condition > 1e12:
            raise SingularInertia(condition)
        return np.linalg.solve(M_reduced, rhs)

    def wheel_torques_for(self, q: np.ndarray, u: np.ndarray, u_dot: np.ndarray) -> np.ndarray:
        """Wheel torques producing u_dot (inverse of mobility_acceleration)"""
        S = bk.base_mobility_matrix(q, self.params)
        M_reduced, C_reduced = self.reduce(q, S @ u)
        return np.linalg.solve(S.T @ self.input_matrix(), M_reduced @ u_dot + C_reduced @ u)

    def evaluate(self, q: np.ndarray, u: np.ndarray, wheel_torque: np.ndarray) -> BaseDynamics:
        S = bk.base_mobility_matrix(q, self.params)
        qd = S @ u
        M_reduced, C_reduced = self.reduce(q, qd)
        return BaseDynamics(
            M_b=self.mass_matrix(q),
            C_b=self.coriolis(q, qd),
            M_reduced=M_reduced,
            C_reduced=C_reduced,
            torque=self.input_matrix() @ wheel_torque,
        )

    def recover_lagrange_multipliers(
        self, q: np.ndarray, qd: np.ndarray, qdd: np.ndarray, torque: np.ndarray
    ) -> Tuple[np.ndarray, float]:
        """Least-squares lambda with J^T lambda = M qdd + C qd - G_b; returns (lambda, residual)"""
        J = bk.base_constraint_matrix(q, self.params)
        rank = np.linalg.matrix_rank(J)
        if rank < J.shape[0]:
            raise RankDeficient(rank, J.shape[0])
        generalized = self.mass_matrix(q) @ qdd + self.coriolis(q, qd) @ qd - torque
        multipliers, *_ = np.linalg.lstsq(J.T, generalized, rcond=None)
        residual = float(np.linalg.norm(J.T @ multipliers - generalized))
        return multipliers, residual


def base_kinetic_energy(q_b, qd_b, params: RobotParams, frozen_arm_config=None) -> float:
    return BaseDynamicsModel(params, frozen_arm_config).kinetic_energy(q_b, qd_b)


def base_mass_matrix(q_b, params: RobotParams, frozen_arm_config=None) -> np.ndarray:
    return BaseDynamicsModel(params, frozen_arm_config).mass_matrix(q_b)


def reduce_base_dynamics(q_b, qd_b, params: RobotParams, frozen_arm_config=None) -> Tuple[np.ndarray, np.ndarray]:
    return BaseDynamicsModel(params, frozen_arm_config).reduce(q_b, qd_b)


def recover_lagrange_multipliers(q_b, qd_b, qdd_b, torque_b, params: RobotParams,
                                 frozen_arm_config=None) -> Tuple[np.ndarray, float]:
    return BaseDynamicsModel(params, frozen_arm_config).recover_lagrange_multipliers(q_b, qd_b, qdd_b, torque_b)

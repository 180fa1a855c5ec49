"""Fixed-step integration of the arm (joint space) and the base (controllable mobility).

The base state is (q_b, u_b); q_b advances with qd_b = S_b(q_b) u_b, so the
nonholonomic constraints hold by construction at every stage.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from services.dynamics import BaseDynamicsModel, FrictionCoefficients, arm_forward_dynamics, friction_torque
from services.kinematics import base_kinematics as bk
from services.params.params_schema import RobotParams
from .sim_schema import IntegratorKind

logger = logging.getLogger(__name__)

Derivative = Callable[[float, np.ndarray], np.ndarray]
ExternalTorque = Callable[[float, np.ndarray], np.ndarray]


def rk4_step(f: Derivative, t: float, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(t, x)
    k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = f(t + dt, x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def semi_implicit_euler_step(f: Derivative, t: float, x: np.ndarray, dt: float, split: int,
                             position_rate: Optional[Derivative] = None) -> np.ndarray:
    """Velocities first, then positions from the updated velocities.

    x = [positions (split); velocities]. position_rate maps a state to the
    position derivative; by default it is the velocity block itself.
    """
    velocity = x[split:] + dt * f(t, x)[split:]
    staged = np.concatenate([x[:split], velocity])
    rate = staged[split:] if position_rate is None else position_rate(t + dt, staged)
    return np.concatenate([x[:split] + dt * rate, velocity])


@dataclass(frozen=True)
class ArmState:
    q: np.ndarray
    qd: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", np.array(self.q, dtype=float).reshape(6))
        object.__setattr__(self, "qd", np.array(self.qd, dtype=float).reshape(6))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.qd])

    @classmethod
    def from_vector(cls, x: np.ndarray) -> 'ArmState':
        return cls(x[:6], x[6:])


@dataclass(frozen=True)
class MobileBaseState:
    """Base coordinates q_b (9) and controllable mobility u_b = (v, omega)"""
    q: np.ndarray
    u: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", np.array(self.q, dtype=float).reshape(bk.N_COORDINATES))
        object.__setattr__(self, "u", np.array(self.u, dtype=float).reshape(bk.N_MOBILITY))

    @property
    def pose(self) -> Tuple[float, float, float]:
        return float(self.q[bk.X]), float(self.q[bk.Y]), float(self.q[bk.PHI])

    def velocity(self, params: RobotParams) -> np.ndarray:
        return bk.lift_velocity(self.q, self.u, params)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.u])

    @classmethod
    def from_vector(cls, x: np.ndarray) -> 'MobileBaseState':
        return cls(x[:bk.N_COORDINATES], x[bk.N_COORDINATES:])


def arm_rates(
    params: RobotParams,
    torque: Sequence[float],
    friction: Optional[FrictionCoefficients] = None,
    external: Optional[ExternalTorque] = None,
    gravity: Optional[float] = None,
    free_joints: Optional[Sequence[int]] = None,
) -> Derivative:
    """x = [q; qd] -> [qd; qdd] with the torque held over the step"""
    torque = np.asarray(torque, dtype=float)

    def rates(t: float, x: np.ndarray) -> np.ndarray:
        q, qd = x[:6], x[6:]
        fr = friction_torque(qd, friction) if friction is not None else None
        ex = external(t, q) if external is not None else None
        qdd = arm_forward_dynamics(q, qd, torque, fr, ex, params, gravity=gravity,
                                   free_joints=free_joints, fast=True)
        return np.concatenate([qd, qdd])

    return rates


def base_rates(model: BaseDynamicsModel, wheel_torque: Sequence[float]) -> Derivative:
    """x = [q_b; u_b] -> [S_b u_b; u_dot] from the reduced model"""
    wheel_torque = np.asarray(wheel_torque, dtype=float)
    params = model.params

    def rates(t: float, x: np.ndarray) -> np.ndarray:
        q, u = x[:bk.N_COORDINATES], x[bk.N_COORDINATES:]
        return np.concatenate([bk.lift_velocity(q, u, params), model.mobility_acceleration(q, u, wheel_torque)])

    return rates


def _base_position_rate(params: RobotParams) -> Derivative:
    def rate(t: float, x: np.ndarray) -> np.ndarray:
        return bk.lift_velocity(x[:bk.N_COORDINATES], x[bk.N_COORDINATES:], params)
    return rate


def _advance(f: Derivative, t: float, x: np.ndarray, dt: float, scheme: IntegratorKind, split: int,
             position_rate: Optional[Derivative] = None) -> np.ndarray:
    if scheme is IntegratorKind.RK4:
        return rk4_step(f, t, x, dt)
    return semi_implicit_euler_step(f, t, x, dt, split, position_rate)


def integrate_step(
    arm: Optional[ArmState],
    base: Optional[MobileBaseState],
    arm_torque: Optional[Sequence[float]],
    wheel_torque: Optional[Sequence[float]],
    dt: float,
    params: RobotParams,
    base_model: Optional[BaseDynamicsModel] = None,
    scheme: IntegratorKind = IntegratorKind.RK4,
    t: float = 0.0,
    friction: Optional[FrictionCoefficients] = None,
    external: Optional[ExternalTorque] = None,
    gravity: Optional[float] = None,
    free_joints: Optional[Sequence[int]] = None,
) -> Tuple[Optional[ArmState], Optional[MobileBaseState]]:
    """One step of either or both subsystems; SingularInertia propagates"""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    next_arm, next_base = arm, base
    if arm is not None:
        torque = np.zeros(6) if arm_torque is None else arm_torque
        f = arm_rates(params, torque, friction, external, gravity, free_joints)
        next_arm = ArmState.from_vector(_advance(f, t, arm.as_vector(), dt, scheme, 6))
    if base is not None:
        model = base_model if base_model is not None else BaseDynamicsModel(params)
        torque = np.zeros(2) if wheel_torque is None else wheel_torque
        f = base_rates(model, torque)
        x = _advance(f, t, base.as_vector(), dt, scheme, bk.N_COORDINATES, _base_position_rate(params))
        next_base = MobileBaseState.from_vector(x)
    return next_arm, next_base

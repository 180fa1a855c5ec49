"""Nonholonomic kinematics of the differential-drive base with two offset castors.

Generalized coordinates (9):
    q_b = [x_ob, y_ob, phi_b, beta_1c, beta_2c, phi_1f, phi_2f, phi_1c, phi_2c]
Controllable mobility (2):
    u_b = [v, omega]  (base-frame forward speed, yaw rate)

Base frame: x forward, y left. Fixed wheel 1 sits at y = -b, wheel 2 at y = +b.
Castor steering axes are at (-a, -p) and (-a, +p); each wheel trails its axis
by d, and beta = 0 means trailing straight behind for forward motion.
"""
from typing import Optional, Tuple

import numpy as np

from services.params.params_schema import RobotParams
from .exceptions import CastorSingularity

N_COORDINATES = 9
N_MOBILITY = 2
X, Y, PHI, BETA1, BETA2, WHEEL1, WHEEL2, CASTOR1, CASTOR2 = range(9)
CONSTRAINT_ROWS = (
    "base_lateral",
    "fixed1_rolling",
    "fixed2_rolling",
    "castor1_rolling",
    "castor2_rolling",
    "castor1_lateral",
    "castor2_lateral",
)


def castor_mounts(params: RobotParams) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """Steering-axis positions (x, y) of castor 1 and castor 2 in the base frame"""
    g = params.geometry
    return (-g.a, -g.p), (-g.a, g.p)


def _check_castor(params: RobotParams) -> None:
    g = params.geometry
    if abs(g.d) < 1e-12:
        raise CastorSingularity("castor trail d = 0 makes the steering rate undefined")
    if abs(g.r_c) < 1e-12:
        raise CastorSingularity("castor radius r_c = 0 makes the wheel spin undefined")


def base_constraint_matrix(q_b: np.ndarray, params: RobotParams) -> np.ndarray:
    """Rolling and no-slip constraints J(q_b), one row per CONSTRAINT_ROWS entry (7 x 9)"""
    g = params.geometry
    phi = q_b[PHI]
    c, s = np.cos(phi), np.sin(phi)
    J = np.zeros((len(CONSTRAINT_ROWS), N_COORDINATES))

    J[0, [X, Y]] = (-s, c)
    J[1, [X, Y, PHI, WHEEL1]] = (c, s, g.b, -g.r_f)
    J[2, [X, Y, PHI, WHEEL2]] = (c, s, -g.b, -g.r_f)

    for i, (hx, hy) in enumerate(castor_mounts(params)):
        beta = q_b[BETA1 + i]
        cb, sb = np.cos(beta), np.sin(beta)
        heading = phi + beta
        # hx = -a
        J[3 + i, [X, Y, PHI, CASTOR1 + i]] = (
            np.cos(heading), np.sin(heading), -hy * cb + hx * sb, -g.r_c
        )
        J[5 + i, [X, Y, PHI, BETA1 + i]] = (
            -np.sin(heading), np.cos(heading), hy * sb + hx * cb - g.d, -g.d
        )
    return J


def base_mobility_matrix(q_b: np.ndarray, params: RobotParams) -> np.ndarray:
    """S_b(q_b) with q_b_dot = S_b u_b, spanning null(J) (9 x 2)"""
    _check_castor(params)
    g = params.geometry
    phi = q_b[PHI]
    S = np.zeros((N_COORDINATES, N_MOBILITY))
    S[X, 0] = np.cos(phi)
    S[Y, 0] = np.sin(phi)
    S[PHI, 1] = 1.0
    S[WHEEL1] = (1.0 / g.r_f, g.b / g.r_f)
    S[WHEEL2] = (1.0 / g.r_f, -g.b / g.r_f)
    for i, (hx, hy) in enumerate(castor_mounts(params)):
        beta = q_b[BETA1 + i]
        cb, sb = np.cos(beta), np.sin(beta)
        S[BETA1 + i] = (-sb / g.d, (hy * sb + hx * cb) / g.d - 1.0)
        S[CASTOR1 + i] = (cb / g.r_c, (-hy * cb + hx * sb) / g.r_c)
    return S


def base_mobility_matrix_rate(q_b: np.ndarray, qd_b: np.ndarray, params: RobotParams) -> np.ndarray:
    """Analytic time derivative of S_b along qd_b"""
    _check_castor(params)
    g = params.geometry
    phi, phi_rate = q_b[PHI], qd_b[PHI]
    Sd = np.zeros((N_COORDINATES, N_MOBILITY))
    Sd[X, 0] = -np.sin(phi) * phi_rate
    Sd[Y, 0] = np.cos(phi) * phi_rate
    for i, (hx, hy) in enumerate(castor_mounts(params)):
        beta, beta_rate = q_b[BETA1 + i], qd_b[BETA1 + i]
        cb, sb = np.cos(beta), np.sin(beta)
        Sd[BETA1 + i] = (-cb / g.d * beta_rate, (hy * cb - hx * sb) / g.d * beta_rate)
        Sd[CASTOR1 + i] = (-sb / g.r_c * beta_rate, (hy * sb + hx * cb) / g.r_c * beta_rate)
    return Sd


def lift_velocity(q_b: np.ndarray, u_b: np.ndarray, params: RobotParams) -> np.ndarray:
    return base_mobility_matrix(q_b, params) @ np.asarray(u_b, dtype=float)


def constraint_residual(q_b: np.ndarray, qd_b: np.ndarray, params: RobotParams) -> float:
    return float(np.linalg.norm(base_constraint_matrix(q_b, params) @ qd_b))


def wheel_rates(u_b: np.ndarray, params: RobotParams) -> np.ndarray:
    """Fixed-wheel spin rates (right, left) for a mobility command"""
    g = params.geometry
    v, omega = u_b
    return np.array([(v + g.b * omega) / g.r_f, (v - g.b * omega) / g.r_f])


def mobility_from_wheel_rates(rates: np.ndarray, params: RobotParams,
                              radii: Optional[Tuple[float, float]] = None) -> np.ndarray:
    """Inverse of wheel_rates, optionally with per-wheel effective radii"""
    g = params.geometry
    r1, r2 = radii if radii is not None else (g.r_f, g.r_f)
    s1, s2 = r1 * rates[0], r2 * rates[1]
    return np.array([(s1 + s2) / 2.0, (s1 - s2) / (2.0 * g.b)])


def trailing_castor_angles(u_b: np.ndarray, params: RobotParams) -> np.ndarray:
    """Castor angles aligned with the steering-axis velocity (exact for straight motion)"""
    angles = []
    for hx, hy in castor_mounts(params):
        v, omega = u_b
        vx, vy = v - omega * hy, omega * hx
        angles.append(np.arctan2(vy, vx) if np.hypot(vx, vy) > 1e-12 else 0.0)
    return np.array(angles)

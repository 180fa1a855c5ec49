"""Executive tip targets -> continuous joint reference.

Each executive tick the new tip target is solved with position IK (nozzle
orientation in the null space), seeded with the previous solution. The joint
reference replays the segment between the last two knots over the next tick,
so the arm trails the executive by exactly one tick.
"""
import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from services.kinematics import arm_ik_position
from services.mission.mission_plan import TipTarget
from services.params.params_schema import RobotParams
from .controller import JointReference

logger = logging.getLogger(__name__)

PAINT_SEED = np.array([-np.pi / 2, -1.0, 1.8, 0.0, -0.8, 0.0])
_UP = np.array([0.0, 0.0, 1.0])


def tool_frame(aim: Sequence[float]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Roll-zero axes x0, y0 and the unit aim z.

    x0 is horizontal; for a vertical aim it falls back to world x projected
    off the aim.
    """
    z = np.asarray(aim, dtype=float)
    z = z / np.linalg.norm(z)
    x0 = np.cross(z, _UP)
    if np.linalg.norm(x0) < 1e-6:
        x0 = np.array([1.0, 0.0, 0.0]) - z[0] * z
    x0 = x0 / np.linalg.norm(x0)
    return x0, np.cross(z, x0), z


def tool_rotation(aim: Sequence[float], roll: float) -> np.ndarray:
    """Columns x, y, z of the tool frame: z along the aim, x horizontal at roll 0"""
    x0, y0, z = tool_frame(aim)
    c, s = np.cos(roll), np.sin(roll)
    x = c * x0 + s * y0
    return np.column_stack([x, np.cross(z, x), z])


def tool_aim_roll(rotation: np.ndarray) -> Tuple[Tuple[float, float, float], float]:
    """Aim and roll of a tool frame, the inverse of tool_rotation"""
    R = np.asarray(rotation, dtype=float)
    x0, y0, _ = tool_frame(R[:, 2])
    roll = float(np.arctan2(R[:, 0] @ y0, R[:, 0] @ x0))
    return tuple(float(v) for v in R[:, 2]), roll


class ArmTracker:
    """Holds the last IK knot and the Hermite segment being replayed"""

    def __init__(self, params: RobotParams, seed: Optional[Sequence[float]] = None) -> None:
        self.params = params
        self.seed = PAINT_SEED.copy() if seed is None else np.asarray(seed, dtype=float)
        self._knot_t: Optional[float] = None
        self._knot_q: Optional[np.ndarray] = None
        self._knot_v = np.zeros(6)
        self._spline: Optional[CubicHermiteSpline] = None
        self._lag = 0.0

    def solve(self, tip: TipTarget) -> np.ndarray:
        """Joint solution of a tip target; NoConvergence propagates"""
        seed = self._knot_q if self._knot_q is not None else self.seed
        rotation = tool_rotation(tip.aim, tip.roll)
        position = np.asarray(tip.position, dtype=float) - self.params.geometry.arm_mount
        return arm_ik_position(position, seed, self.params, target_rotation=rotation)

    def start(self, tip: TipTarget, t: float) -> np.ndarray:
        q = self.solve(tip)
        self._knot_t, self._knot_q, self._knot_v = t, q, np.zeros(6)
        self._spline = None
        self.seed = q
        return q

    def stop(self) -> None:
        self._knot_t = self._knot_q = self._spline = None
        self._knot_v = np.zeros(6)

    def push(self, tip: TipTarget, t: float) -> None:
        if self._knot_q is None:
            self.start(tip, t)
            return
        q = self.solve(tip)
        span = t - self._knot_t
        if span <= 0.0:
            raise ValueError("knots must advance in time")
        v = (q - self._knot_q) / span
        self._spline = CubicHermiteSpline([self._knot_t, t], np.vstack([self._knot_q, q]),
                                          np.vstack([self._knot_v, v]), axis=0)
        self._lag = span
        self._knot_t, self._knot_q, self._knot_v = t, q, v
        self.seed = q

    def reference(self, t: float) -> JointReference:
        """Reference at simulation time t, one knot interval behind the executive"""
        if self._knot_q is None:
            raise RuntimeError("tracker has no knot yet")
        if self._spline is None:
            return JointReference.hold(self._knot_q)
        lo, hi = self._spline.x[0], self._spline.x[-1]
        tau = min(max(t - self._lag, lo), hi)
        return JointReference(self._spline(tau), self._spline(tau, 1), self._spline(tau, 2))

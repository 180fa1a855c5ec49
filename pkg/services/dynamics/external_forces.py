"""Spray-gun wrench: axial reaction force plus band-limited vibration."""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from services.kinematics.arm_kinematics import arm_fk, arm_jacobian
from services.params.params_schema import RobotParams, SprayParams

logger = logging.getLogger(__name__)

VIBRATION_COMPONENTS = 8
VIBRATION_FREQUENCY_BAND = (15.0, 60.0)  # Hz
NOMINAL_RMS_FRACTION = (1.6, 0.8)  # drawn RMS lies in [1.6 low, 0.8 high] of the band
DRY_GUN_RATIO = 0.08  # vibration left when the cup runs dry


@dataclass(frozen=True)
class SprayDisturbance:
    """Sum-of-sinusoids tip acceleration in the tool frame, drawn once from an rng"""
    amplitudes: np.ndarray
    frequencies: np.ndarray
    phases: np.ndarray
    directions: np.ndarray
    rms: float
    reaction_force: float
    gun_mass: float

    @classmethod
    def from_rng(cls, spray: SprayParams, rng: np.random.Generator,
                 components: int = VIBRATION_COMPONENTS) -> 'SprayDisturbance':
        low, high = spray.vibration_band
        lower = min(NOMINAL_RMS_FRACTION[0] * low, 0.5 * (low + high))
        upper = max(NOMINAL_RMS_FRACTION[1] * high, lower)
        rms = float(rng.uniform(lower, upper))
        # one frequency per sub-band keeps the components apart
        edges = np.linspace(*VIBRATION_FREQUENCY_BAND, components + 1)
        width = np.diff(edges)
        frequencies = edges[:-1] + width * rng.uniform(0.2, 0.8, size=components)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=components)
        directions = rng.normal(size=(components, 3))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        weights = rng.uniform(0.5, 1.0, size=components)
        # E|a|^2 = sum(A_k^2) / 2 for distinct frequencies
        amplitudes = weights * rms * np.sqrt(2.0 / np.sum(weights ** 2))
        logger.debug("Spray vibration drawn: RMS %.2f m/s^2 over %d components", rms, components)
        return cls(amplitudes, frequencies, phases, directions, rms, spray.reaction_force, spray.gun_mass)

    def acceleration(self, t: float, paint_present: bool = True) -> np.ndarray:
        """Vibration acceleration of the tip in tool axes (m/s^2)"""
        signal = self.amplitudes * np.sin(2.0 * np.pi * self.frequencies * t + self.phases)
        acceleration = signal @ self.directions
        return acceleration if paint_present else DRY_GUN_RATIO * acceleration

    def tip_force(self, tool_rotation: np.ndarray, t: float, paint_present: bool = True) -> np.ndarray:
        """Environment force on the tip in frame 0: spray reaction plus vibration"""
        nozzle_axis = tool_rotation[:, 2]
        reaction = -self.reaction_force * nozzle_axis if paint_present else np.zeros(3)
        vibration = self.gun_mass * (tool_rotation @ self.acceleration(t, paint_present))
        return reaction + vibration

    def joint_torque(self, q_a: Sequence[float], t: float, params: RobotParams,
                     paint_present: bool = True) -> np.ndarray:
        """G_ex = -J^T [F_env; 0]: torque the drives supply against the tip force"""
        tool = arm_fk(q_a, params)
        force = self.tip_force(tool.rotation, t, paint_present)
        return -arm_jacobian(q_a, params)[:3].T @ force


def spray_external_torque(
    q_a: Sequence[float],
    spray_on: bool,
    t: float,
    params: RobotParams,
    rng: Optional[np.random.Generator] = None,
    disturbance: Optional[SprayDisturbance] = None,
) -> np.ndarray:
    """Joint torques due to the spray gun; zero while the gun is off"""
    if not spray_on:
        return np.zeros(6)
    if disturbance is None:
        if rng is None:
            raise ValueError("spray_external_torque needs an rng or a prepared disturbance")
        disturbance = SprayDisturbance.from_rng(params.spray, rng)
    return disturbance.joint_torque(q_a, t, params)

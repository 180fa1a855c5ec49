"""Ultrasonic range sensors: ten mounts on the base, ray-cast against the room"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .room import RoomModel

SONAR_MIN_RANGE = 0.02
SONAR_MAX_RANGE = 5.0
SONAR_RESOLUTION = 0.01
SONAR_NOISE_SIGMA = 0.005
SIDE_BASELINE = 0.40


class RangeStatus(str, Enum):
    OK = "ok"
    OUT_OF_RANGE = "OutOfRange"
    BELOW_MIN_RANGE = "BelowMinRange"


@dataclass(frozen=True)
class SonarMount:
    """Mount pose in the base frame; the cone axis points along yaw"""
    name: str
    x: float
    y: float
    yaw: float
    role: str

    def world_ray(self, pose: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
        px, py, heading = pose
        c, s = math.cos(heading), math.sin(heading)
        origin = np.array([px + c * self.x - s * self.y, py + s * self.x + c * self.y])
        angle = heading + self.yaw
        return origin, np.array([math.cos(angle), math.sin(angle)])


@dataclass(frozen=True)
class SonarReading:
    name: str
    status: RangeStatus
    value: Optional[float] = None
    target: Optional[str] = None
    target_index: Optional[int] = None

    @property
    def valid(self) -> bool:
        return self.status is RangeStatus.OK


DEFAULT_MOUNTS: Tuple[SonarMount, ...] = (
    SonarMount("FRONT", 0.40, 0.0, 0.0, "front"),
    SonarMount("RIGHT", 0.0, -0.27, -math.pi / 2, "right"),
    SonarMount("SIDE1", 0.5 * SIDE_BASELINE, -0.27, -math.pi / 2, "side"),
    SonarMount("SIDE2", -0.5 * SIDE_BASELINE, -0.27, -math.pi / 2, "side"),
    SonarMount("OBS1", 0.40, 0.20, math.pi / 6, "obstacle"),
    SonarMount("OBS2", 0.40, -0.20, -math.pi / 6, "obstacle"),
    SonarMount("OBS3", 0.0, 0.27, math.pi / 2, "obstacle"),
    SonarMount("OBS4", -0.42, 0.20, 5 * math.pi / 6, "obstacle"),
    SonarMount("OBS5", -0.42, -0.20, -5 * math.pi / 6, "obstacle"),
    SonarMount("OBS6", -0.42, 0.0, math.pi, "obstacle"),
)


def mounts_by_role(role: str, mounts: Iterable[SonarMount] = DEFAULT_MOUNTS) -> Tuple[SonarMount, ...]:
    return tuple(m for m in mounts if m.role == role)


def mount_named(name: str, mounts: Iterable[SonarMount] = DEFAULT_MOUNTS) -> SonarMount:
    for mount in mounts:
        if mount.name == name:
            return mount
    raise KeyError(name)


def classify_range(distance: float) -> RangeStatus:
    if distance > SONAR_MAX_RANGE:
        return RangeStatus.OUT_OF_RANGE
    if distance < SONAR_MIN_RANGE:
        return RangeStatus.BELOW_MIN_RANGE
    return RangeStatus.OK


def quantize(distance: float, resolution: float = SONAR_RESOLUTION) -> float:
    return round(distance / resolution) * resolution


def sonar_measure(
    room: RoomModel,
    pose: Sequence[float],
    mount: SonarMount,
    rng: Optional[np.random.Generator],
    t: float = 0.0,
    noise_sigma: float = SONAR_NOISE_SIGMA,
) -> SonarReading:
    """One range reading; rng=None gives the noiseless quantized distance"""
    origin, direction = mount.world_ray(pose)
    hit = room.ray_cast(origin, direction, t)
    if hit is None or not math.isfinite(hit.distance):
        return SonarReading(mount.name, RangeStatus.OUT_OF_RANGE)
    noisy = hit.distance + (rng.normal(0.0, noise_sigma) if rng is not None and noise_sigma > 0 else 0.0)
    value = quantize(noisy)
    status = classify_range(value)
    if status is not RangeStatus.OK:
        return SonarReading(mount.name, status)
    return SonarReading(mount.name, status, value, hit.target, hit.index)


@dataclass(frozen=True)
class SonarSuite:
    mounts: Tuple[SonarMount, ...] = DEFAULT_MOUNTS
    noise_sigma: float = SONAR_NOISE_SIGMA

    def measure_all(self, room: RoomModel, pose: Sequence[float], rng: Optional[np.random.Generator],
                    t: float = 0.0) -> Dict[str, SonarReading]:
        """Readings of every mount, drawn in mount order so a seeded rng is reproducible"""
        return {m.name: sonar_measure(room, pose, m, rng, t, self.noise_sigma) for m in self.mounts}

    def role(self, role: str) -> Tuple[SonarMount, ...]:
        return mounts_by_role(role, self.mounts)

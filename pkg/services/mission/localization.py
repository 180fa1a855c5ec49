import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from services.kinematics import Transform
from services.kinematics.base_kinematics import mobility_from_wheel_rates
from services.params.params_schema import RobotParams
from .exceptions import InvalidReading
from .room import RoomModel
from .sonar import DEFAULT_MOUNTS, SIDE_BASELINE, SonarMount, SonarReading, mount_named, mounts_by_role

logger = logging.getLogger(__name__)

CORRECTION_GATE = 0.30
YAW_GATE = 0.15
YAW_GAIN = 0.5
CORNER_MARGIN = 0.10
ODOMETRY_RADIUS_ERRORS = (0.003, -0.002)
ODOMETRY_RATE_NOISE = 0.01

# initial heading when the front wall is ahead and wall 0 is on the right
REGISTRATION_HEADING = -math.pi / 2

Reading = Union[SonarReading, float, None]


def wrap_angle(angle: float) -> float:
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


def _value(name: str, reading: Reading) -> float:
    if isinstance(reading, SonarReading):
        if not reading.valid:
            raise InvalidReading(name, reading.status.value)
        return float(reading.value)
    if reading is None or not math.isfinite(reading):
        raise InvalidReading(name, "missing")
    return float(reading)


def estimate_yaw(side1: Reading, side2: Reading, baseline: float = SIDE_BASELINE) -> float:
    """Heading relative to the wall the side pair faces; positive turns away from it"""
    d1 = _value("SIDE1", side1)
    d2 = _value("SIDE2", side2)
    return math.atan((d1 - d2) / baseline)


def _mount_offset(mount: SonarMount, heading: float) -> np.ndarray:
    c, s = math.cos(heading), math.sin(heading)
    return np.array([c * mount.x - s * mount.y, s * mount.x + c * mount.y])


def _mount_direction(mount: SonarMount, heading: float) -> np.ndarray:
    return np.array([math.cos(heading + mount.yaw), math.sin(heading + mount.yaw)])


def register_world_frame(
    front: Reading,
    right: Reading,
    yaw: float,
    mounts: Sequence[SonarMount] = DEFAULT_MOUNTS,
) -> Transform:
    """Base-to-world transform with the origin at the front-right corner.

    The front sonar measures the front wall (y = 0) and the right sonar the
    right wall (x = 0); yaw is the side-pair estimate against the right wall.
    """
    s_front = _value("FRONT", front)
    s_right = _value("RIGHT", right)
    heading = REGISTRATION_HEADING + yaw
    front_mount = mount_named("FRONT", mounts)
    right_mount = mount_named("RIGHT", mounts)
    y = -_mount_offset(front_mount, heading)[1] - s_front * _mount_direction(front_mount, heading)[1]
    x = -_mount_offset(right_mount, heading)[0] - s_right * _mount_direction(right_mount, heading)[0]
    logger.info("world frame registered: base at (%.3f, %.3f) heading %.4f rad", x, y, heading)
    return Transform.from_pose2d(x, y, heading)


def pose_from_transform(transform: Transform) -> Tuple[float, float, float]:
    return float(transform.translation[0]), float(transform.translation[1]), float(transform.yaw())


def dead_reckon(pose: Sequence[float], u_b: Sequence[float], dt: float) -> Tuple[float, float, float]:
    """Exact unicycle step: straight line for omega = 0, circular arc otherwise"""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    x, y, heading = pose
    v, omega = u_b
    if abs(omega) < 1e-12:
        return x + v * dt * math.cos(heading), y + v * dt * math.sin(heading), heading
    new_heading = heading + omega * dt
    radius = v / omega
    return (x + radius * (math.sin(new_heading) - math.sin(heading)),
            y - radius * (math.cos(new_heading) - math.cos(heading)),
            new_heading)


@dataclass(frozen=True)
class AppliedCorrection:
    sensor: str
    wall: int
    innovation: float
    accepted: bool


@dataclass(frozen=True)
class PoseCorrection:
    pose: Tuple[float, float, float]
    corrections: Tuple[AppliedCorrection, ...] = ()

    @property
    def accepted(self) -> List[AppliedCorrection]:
        return [c for c in self.corrections if c.accepted]


def _predict(room: RoomModel, pose: Sequence[float], mount: SonarMount) -> Optional[Tuple[float, int, float]]:
    """(distance, wall, n.d) expected from the known room, None when ambiguous"""
    origin = np.array(pose[:2]) + _mount_offset(mount, pose[2])
    direction = _mount_direction(mount, pose[2])
    hit = room.ray_cast(origin, direction, include_obstacles=False)
    if hit is None or hit.through_opening or not math.isfinite(hit.distance):
        return None
    u, _ = room.wall_coordinates(hit.index, origin + hit.distance * direction)
    if u < CORNER_MARGIN or u > room.wall_length(hit.index) - CORNER_MARGIN:
        return None
    dx, dy = room.wall_direction(hit.index)
    normal = np.array([-dy, dx])
    return hit.distance, hit.index, float(normal @ direction)


def correct_pose(
    pose: Sequence[float],
    readings: Mapping[str, SonarReading],
    room: RoomModel,
    mounts: Sequence[SonarMount] = DEFAULT_MOUNTS,
    gate: float = CORRECTION_GATE,
    yaw_gain: float = YAW_GAIN,
) -> PoseCorrection:
    """Snap the pose components the localization sonars observe.

    Each valid reading is associated with the wall the estimated pose expects
    it to see; readings further than the gate from that expectation are
    rejected. Sensors on the same wall are averaged into one snap along the
    wall normal; the side pair also pulls the heading toward its estimate.
    """
    x, y, heading = pose
    applied: List[AppliedCorrection] = []

    side = mounts_by_role("side", mounts)
    if len(side) == 2 and all(readings.get(m.name) is not None and readings[m.name].valid for m in side):
        predictions = [_predict(room, (x, y, heading), m) for m in side]
        if all(p is not None for p in predictions) and predictions[0][1] == predictions[1][1]:
            wall = predictions[0][1]
            values = [readings[m.name].value for m in side]
            if all(abs(v - p[0]) <= gate for v, p in zip(values, predictions)):
                measured = room.wall_heading(wall) + math.atan((values[0] - values[1]) / (side[0].x - side[1].x))
                innovation = wrap_angle(measured - heading)
                accepted = abs(innovation) <= YAW_GATE
                if accepted:
                    heading = wrap_angle(heading + yaw_gain * innovation)
                applied.append(AppliedCorrection("SIDE", wall, innovation, accepted))

    snaps: Dict[int, List[float]] = {}
    for mount in mounts:
        if mount.role == "obstacle":
            continue
        reading = readings.get(mount.name)
        if reading is None or not reading.valid:
            continue
        prediction = _predict(room, (x, y, heading), mount)
        if prediction is None:
            continue
        expected, wall, n_dot_d = prediction
        innovation = reading.value - expected
        accepted = abs(innovation) <= gate
        applied.append(AppliedCorrection(mount.name, wall, innovation, accepted))
        if accepted:
            snaps.setdefault(wall, []).append(-innovation * n_dot_d)

    for wall, shifts in snaps.items():
        dx, dy = room.wall_direction(wall)
        shift = float(np.mean(shifts))
        x, y = x - dy * shift, y + dx * shift

    return PoseCorrection((x, y, heading), tuple(applied))


@dataclass
class WheelOdometry:
    """Encoder odometry: true wheels have slightly different radii from the nominal model"""
    params: RobotParams
    radius_errors: Tuple[float, float] = ODOMETRY_RADIUS_ERRORS
    rate_noise: float = ODOMETRY_RATE_NOISE
    travelled: float = field(default=0.0, init=False)

    @property
    def true_radii(self) -> Tuple[float, float]:
        r = self.params.geometry.r_f
        return r * (1.0 + self.radius_errors[0]), r * (1.0 + self.radius_errors[1])

    def encoder_rates(self, u_true: Sequence[float], rng: Optional[np.random.Generator]) -> np.ndarray:
        g = self.params.geometry
        v, omega = u_true
        r1, r2 = self.true_radii
        rates = np.array([(v + g.b * omega) / r1, (v - g.b * omega) / r2])
        if rng is not None and self.rate_noise > 0.0:
            rates = rates + rng.normal(0.0, self.rate_noise, size=2)
        return rates

    def measure(self, u_true: Sequence[float], dt: float, rng: Optional[np.random.Generator]) -> np.ndarray:
        """Mobility the estimator believes in, read through the nominal radius"""
        self.travelled += abs(u_true[0]) * dt
        return mobility_from_wheel_rates(self.encoder_rates(u_true, rng), self.params)

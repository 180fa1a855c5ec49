"""Base motion as a chain of straight drives and in-place rotations.

Each segment follows a trapezoidal speed profile; its command adds feedback
on the estimated pose, so sonar corrections pull the real base back onto the
planned line.
"""
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from .localization import wrap_angle

BASE_SPEED_CAP = 0.5
BASE_ACCEL = 1.0
TURN_RATE_CAP = 1.0
TURN_ACCEL = 2.0
HEADING_DEADBAND = 0.05

ALONG_GAIN = 1.0
LATERAL_GAIN = 1.0
HEADING_GAIN = 2.0
MAX_HEADING_CORRECTION = 0.1
MIN_STEER_SPEED = 0.05


@dataclass(frozen=True)
class TrapezoidProfile:
    """Signed rest-to-rest move of `distance` with speed and acceleration caps"""
    distance: float
    v_max: float
    a_max: float

    def __post_init__(self) -> None:
        if self.v_max <= 0.0 or self.a_max <= 0.0:
            raise ValueError("profile caps must be positive")

    @property
    def _peak(self) -> float:
        return min(self.v_max, math.sqrt(abs(self.distance) * self.a_max))

    @property
    def ramp_time(self) -> float:
        return self._peak / self.a_max

    @property
    def duration(self) -> float:
        peak = self._peak
        if peak == 0.0:
            return 0.0
        return 2.0 * self.ramp_time + (abs(self.distance) - peak * self.ramp_time) / peak

    def sample(self, t: float) -> Tuple[float, float, float]:
        """(position, velocity, acceleration) at t, clamped to the ends"""
        sign = math.copysign(1.0, self.distance)
        peak, ramp, total = self._peak, self.ramp_time, self.duration
        if t <= 0.0 or total == 0.0:
            return 0.0, 0.0, 0.0
        if t >= total:
            return self.distance, 0.0, 0.0
        if t < ramp:
            return sign * 0.5 * self.a_max * t * t, sign * self.a_max * t, sign * self.a_max
        if t <= total - ramp:
            return sign * (0.5 * peak * ramp + peak * (t - ramp)), sign * peak, 0.0
        rest = total - t
        return sign * (abs(self.distance) - 0.5 * self.a_max * rest * rest), sign * self.a_max * rest, -sign * self.a_max


@dataclass(frozen=True)
class DriveSegment:
    start: Tuple[float, float]
    heading: float
    profile: TrapezoidProfile

    @property
    def duration(self) -> float:
        return self.profile.duration

    def reference(self, t: float) -> Tuple[float, float, float]:
        s, _, _ = self.profile.sample(t)
        return (self.start[0] + s * math.cos(self.heading), self.start[1] + s * math.sin(self.heading), self.heading)

    def end_pose(self) -> Tuple[float, float, float]:
        return self.reference(self.duration)

    def command(self, t: float, pose: Sequence[float]) -> np.ndarray:
        s_ref, v_ref, _ = self.profile.sample(t)
        h = np.array([math.cos(self.heading), math.sin(self.heading)])
        offset = np.array(pose[:2]) - (np.array(self.start) + s_ref * h)
        along = float(h @ offset)
        lateral = float(h[0] * offset[1] - h[1] * offset[0])
        heading_error = wrap_angle(pose[2] - self.heading)
        steer_speed = v_ref if abs(v_ref) >= MIN_STEER_SPEED else math.copysign(MIN_STEER_SPEED, self.profile.distance)
        wanted = float(np.clip(-LATERAL_GAIN * lateral / steer_speed, -MAX_HEADING_CORRECTION, MAX_HEADING_CORRECTION))
        v = v_ref - ALONG_GAIN * along
        omega = HEADING_GAIN * (wanted - heading_error)
        return np.array([v, omega])


@dataclass(frozen=True)
class RotateSegment:
    position: Tuple[float, float]
    start_heading: float
    profile: TrapezoidProfile

    @property
    def duration(self) -> float:
        return self.profile.duration

    def reference(self, t: float) -> Tuple[float, float, float]:
        angle, _, _ = self.profile.sample(t)
        return self.position[0], self.position[1], wrap_angle(self.start_heading + angle)

    def end_pose(self) -> Tuple[float, float, float]:
        return self.reference(self.duration)

    def command(self, t: float, pose: Sequence[float]) -> np.ndarray:
        angle, omega_ref, _ = self.profile.sample(t)
        target = self.start_heading + angle
        h = np.array([math.cos(pose[2]), math.sin(pose[2])])
        drift = float(h @ (np.array(pose[:2]) - np.array(self.position)))
        return np.array([-ALONG_GAIN * drift, omega_ref + HEADING_GAIN * wrap_angle(target - pose[2])])


Segment = Union[DriveSegment, RotateSegment]


@dataclass(frozen=True)
class BaseMotion:
    segments: Tuple[Segment, ...] = ()

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.segments)

    def _locate(self, t: float) -> Tuple[Segment, float]:
        for segment in self.segments:
            if t < segment.duration:
                return segment, t
            t -= segment.duration
        return self.segments[-1], self.segments[-1].duration

    def reference(self, t: float) -> Tuple[float, float, float]:
        segment, local = self._locate(t)
        return segment.reference(local)

    def command(self, t: float, pose: Sequence[float]) -> np.ndarray:
        if not self.segments:
            return np.zeros(2)
        if t >= self.duration:
            return np.zeros(2)
        segment, local = self._locate(t)
        return segment.command(local, pose)

    def done(self, t: float) -> bool:
        return t >= self.duration - 1e-9


def drive(start: Sequence[float], distance: float, v_max: float = BASE_SPEED_CAP,
          a_max: float = BASE_ACCEL) -> DriveSegment:
    """Straight move along the current heading; negative distance reverses"""
    return DriveSegment((float(start[0]), float(start[1])), float(start[2]), TrapezoidProfile(distance, v_max, a_max))


def rotate(start: Sequence[float], angle: float, rate: float = TURN_RATE_CAP,
           accel: float = TURN_ACCEL) -> RotateSegment:
    return RotateSegment((float(start[0]), float(start[1])), float(start[2]), TrapezoidProfile(angle, rate, accel))


def plan_go_to(
    start: Sequence[float],
    goal: Sequence[float],
    v_max: float = BASE_SPEED_CAP,
    a_max: float = BASE_ACCEL,
    allow_reverse: bool = True,
) -> BaseMotion:
    """Rotate-drive-rotate path; small heading differences are left to the drive feedback"""
    segments: List[Segment] = []
    pose = (float(start[0]), float(start[1]), float(start[2]))
    dx, dy = goal[0] - pose[0], goal[1] - pose[1]
    distance = math.hypot(dx, dy)
    if distance > 1e-3:
        line = math.atan2(dy, dx)
        signed = distance
        if allow_reverse and abs(wrap_angle(line - pose[2])) > math.pi / 2:
            line, signed = wrap_angle(line + math.pi), -distance
        turn = wrap_angle(line - pose[2])
        if abs(turn) > HEADING_DEADBAND:
            segments.append(rotate(pose, turn))
        pose = (pose[0], pose[1], line)
        segments.append(drive(pose, signed, v_max, a_max))
        pose = (float(goal[0]), float(goal[1]), line)
    final = wrap_angle(goal[2] - pose[2])
    if abs(final) > HEADING_DEADBAND or (not segments and abs(final) > 1e-3):
        segments.append(rotate(pose, final))
    return BaseMotion(tuple(segments))

"""Room paint plan unrolled into the ordered activities the executive runs.

Activities are planned in wall coordinates and anchored on the estimated base
pose when they start, so tip targets come out in the base frame.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from services.trajectory import TipPath, plan_paint
from services.trajectory.quintic import quintic_segment
from services.trajectory.trajectory_schema import BasePost, PaintPlan, PaintStrip, TipWaypoint, WallPlan
from .base_motion import (
    BASE_ACCEL,
    BASE_SPEED_CAP,
    BaseMotion,
    DriveSegment,
    plan_go_to,
    rotate,
)
from .localization import wrap_angle
from .mission_schema import MissionPhase
from .room import WALL_COUNT, RoomModel

logger = logging.getLogger(__name__)

ARM_MOVE_DURATION = 2.0
MIN_TRANSIT_DURATION = 1.0
STOW_TIP = (0.25, -0.35, 1.0)
REFILL_TIP = (0.55, 0.0, 0.8)
WALL_AIM = (0.0, -1.0, 0.0)
DOWN_AIM = (0.0, 0.0, -1.0)


@dataclass(frozen=True)
class TipTarget:
    """Nozzle tip target in the base frame (z up from the floor)"""
    position: Tuple[float, float, float]
    roll: float = 0.0
    aim: Tuple[float, float, float] = WALL_AIM


def blend_tips(start: TipTarget, goal: TipTarget, t: float, duration: float) -> TipTarget:
    """Quintic move between two tip targets; the aim is blended and renormalized"""
    if duration <= 0.0 or t >= duration:
        return goal
    if t <= 0.0:
        return start
    segment = quintic_segment(np.concatenate([start.position, [start.roll], start.aim]),
                              np.concatenate([goal.position, [goal.roll], goal.aim]), duration)
    q, _, _ = segment.sample(t)
    aim = q[4:7]
    norm = np.linalg.norm(aim)
    aim = aim / norm if norm > 1e-9 else np.asarray(goal.aim)
    return TipTarget(tuple(float(v) for v in q[:3]), float(q[3]), tuple(float(v) for v in aim))


@dataclass(frozen=True)
class WallAnchor:
    """Estimated base pose in the frame of one wall: u along it, n off it, yaw error to its direction"""
    wall: int
    u: float
    n: float
    yaw_error: float

    @classmethod
    def from_pose(cls, room: RoomModel, wall: int, pose: Sequence[float]) -> 'WallAnchor':
        u, n = room.wall_coordinates(wall, pose)
        return cls(wall, u, n, wrap_angle(pose[2] - room.wall_heading(wall)))

    def tip(self, u_tip: float, z: float, roll: float, standoff: float, base_u: Optional[float] = None) -> TipTarget:
        along = u_tip - (self.u if base_u is None else base_u)
        normal = standoff - self.n
        c, s = math.cos(self.yaw_error), math.sin(self.yaw_error)
        return TipTarget((c * along + s * normal, -s * along + c * normal, z), roll, (-s, -c, 0.0))


def strip_windows(waypoints: Sequence[TipWaypoint], strips: Sequence[PaintStrip]) -> List[Tuple[float, float]]:
    """(start, end) path times of each strip; a strip owns the shift leading to it"""
    ends = []
    for strip in strips:
        end = None
        for a, b in zip(waypoints[:-1], waypoints[1:]):
            if a.spray_on and abs(a.u - strip.u) < 1e-9:
                end = b.t
        ends.append(end)
    windows, start = [], waypoints[0].t
    for end in ends:
        if end is None:
            windows.append((start, start))
            continue
        windows.append((start, end))
        start = end
    if windows:
        windows[-1] = (windows[-1][0], waypoints[-1].t)
    return windows


@dataclass(frozen=True)
class ActivityContext:
    """Runtime anchoring fixed when an activity starts"""
    anchor: WallAnchor
    start_tip: TipTarget
    motion: Optional[BaseMotion] = None


@dataclass(frozen=True)
class Activity:
    phase: MissionPhase
    wall: int
    strip: Optional[int] = None
    standoff: float = 0.175
    context: Optional[ActivityContext] = None

    @property
    def duration(self) -> float:
        raise NotImplementedError

    @property
    def core(self) -> bool:
        return self.phase in (MissionPhase.PAINT_CORE_STRIP, MissionPhase.ADVANCE_POST)

    def begin(self, room: RoomModel, pose: Sequence[float], tip: TipTarget) -> 'Activity':
        return replace(self, context=ActivityContext(WallAnchor.from_pose(room, self.wall, pose), tip))

    def base_command(self, t: float, pose: Sequence[float]) -> np.ndarray:
        motion = self.context.motion if self.context else None
        return motion.command(t, pose) if motion is not None else np.zeros(2)

    def tip_target(self, t: float) -> TipTarget:
        raise NotImplementedError

    def spray_on(self, t: float) -> bool:
        return False

    def finished(self, t: float) -> bool:
        return t >= self.duration - 1e-9


@dataclass(frozen=True)
class CoreStripActivity(Activity):
    """One vertical strip (with the shift leading to it) painted from a stationary post"""
    path: Optional[TipPath] = None
    window: Tuple[float, float] = (0.0, 0.0)
    post_u: float = 0.0

    @property
    def duration(self) -> float:
        return self.window[1] - self.window[0]

    def _sample(self, t: float):
        return self.path.sample(min(self.window[0] + max(t, 0.0), self.path.end_time))

    def tip_target(self, t: float) -> TipTarget:
        sample = self._sample(t)
        anchor = self.context.anchor
        return anchor.tip(sample.position[0], sample.position[1], sample.roll, self.standoff, base_u=anchor.u)

    def spray_on(self, t: float) -> bool:
        return 0.0 <= t < self.duration and self._sample(t).spray_on


@dataclass(frozen=True)
class AdvancePostActivity(Activity):
    """Hop to the next post while the arm moves to the start of its first strip"""
    goal_pose: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    goal_tip: Tuple[float, float, float] = (0.0, 0.0, 0.0)  # (u, z, roll) on the wall
    goal_u: float = 0.0
    v_max: float = BASE_SPEED_CAP
    a_max: float = BASE_ACCEL

    def begin(self, room: RoomModel, pose: Sequence[float], tip: TipTarget) -> 'Activity':
        started = super().begin(room, pose, tip)
        motion = plan_go_to(pose, self.goal_pose, self.v_max, self.a_max)
        return replace(started, context=replace(started.context, motion=motion))

    @property
    def duration(self) -> float:
        motion = self.context.motion if self.context else None
        return max(motion.duration if motion else 0.0, MIN_TRANSIT_DURATION)

    def tip_target(self, t: float) -> TipTarget:
        anchor = self.context.anchor
        u, z, roll = self.goal_tip
        goal = anchor.tip(u, z, roll, self.standoff, base_u=self.goal_u)
        return blend_tips(self.context.start_tip, goal, t, self.duration)


@dataclass(frozen=True)
class TrackedProfile:
    """Base displacement along the wall proportional to the outline tip travel"""
    path: Optional[TipPath] = None
    scale: float = 0.0
    offset: float = 0.0

    @property
    def duration(self) -> float:
        return self.offset + self.path.duration

    @property
    def distance(self) -> float:
        return self.scale * (self.path.waypoints[-1].u - self.path.waypoints[0].u)

    def sample(self, t: float) -> Tuple[float, float, float]:
        local = min(max(t - self.offset, 0.0), self.path.duration)
        tip = self.path.sample(self.path.start_time + local)
        moving = 0.0 < t - self.offset < self.path.duration
        u0 = self.path.waypoints[0].u
        return (self.scale * (tip.position[0] - u0),
                self.scale * tip.velocity[0] if moving else 0.0,
                self.scale * tip.acceleration[0] if moving else 0.0)


@dataclass(frozen=True)
class OutlineActivity(Activity):
    """Top band: the arm rolls the gun, then paints while the base reverses along the wall"""
    path: Optional[TipPath] = None
    base_limits: Tuple[float, float] = (0.45, 0.45)
    pre_move: float = ARM_MOVE_DURATION

    def begin(self, room: RoomModel, pose: Sequence[float], tip: TipTarget) -> 'Activity':
        started = super().begin(room, pose, tip)
        anchor = started.context.anchor
        u_tip0 = self.path.waypoints[0].u
        u_tip1 = self.path.waypoints[-1].u
        travel = u_tip1 - u_tip0
        scale = (self.base_limits[0] - anchor.u) / travel if abs(travel) > 1e-9 else 0.0
        profile = TrackedProfile(self.path, scale, self.pre_move)
        segment = DriveSegment((float(pose[0]), float(pose[1])), room.wall_heading(self.wall), profile)
        return replace(started, context=replace(started.context, motion=BaseMotion((segment,))))

    @property
    def duration(self) -> float:
        return self.pre_move + self.path.duration

    def _base_u(self, t: float) -> float:
        profile = self.context.motion.segments[0].profile
        return self.context.anchor.u + profile.sample(t)[0]

    def _pass_tip(self, t: float) -> TipTarget:
        sample = self.path.sample(self.path.start_time + min(max(t - self.pre_move, 0.0), self.path.duration))
        return self.context.anchor.tip(sample.position[0], sample.position[1], sample.roll,
                                       self.standoff, base_u=self._base_u(t))

    def tip_target(self, t: float) -> TipTarget:
        if t < self.pre_move:
            return blend_tips(self.context.start_tip, self._pass_tip(self.pre_move), t, self.pre_move)
        return self._pass_tip(t)

    def spray_on(self, t: float) -> bool:
        local = t - self.pre_move
        return 0.0 <= local < self.path.duration and self.path.sample(self.path.start_time + local).spray_on


@dataclass(frozen=True)
class TransitActivity(Activity):
    """Base-only travel (to the first post, or around a corner) with the arm repositioning.

    `waypoints` are visited in order; a turn is requested by consecutive poses
    that differ only in heading.
    """
    waypoints: Tuple[Tuple[float, float, float], ...] = ()
    goal_tip: Optional[Tuple[float, float, float]] = None  # (u, z, roll) on the goal wall
    goal_wall: Optional[int] = None
    goal_u: float = 0.0
    v_max: float = BASE_SPEED_CAP
    a_max: float = BASE_ACCEL

    def begin(self, room: RoomModel, pose: Sequence[float], tip: TipTarget) -> 'Activity':
        started = super().begin(room, pose, tip)
        segments = []
        current = tuple(float(v) for v in pose)
        for goal in self.waypoints:
            if math.hypot(goal[0] - current[0], goal[1] - current[1]) < 1e-3:
                turn = wrap_angle(goal[2] - current[2])
                if abs(turn) > 1e-3:
                    segments.append(rotate(current, turn))
            else:
                segments.extend(plan_go_to(current, goal, self.v_max, self.a_max).segments)
            current = goal
        context = replace(started.context, motion=BaseMotion(tuple(segments)))
        if self.goal_wall is not None:
            # the arm lands relative to the goal wall, assuming the base arrives on plan
            final = self.waypoints[-1]
            context = replace(context, anchor=WallAnchor.from_pose(room, self.goal_wall, final))
        return replace(started, context=context)

    @property
    def duration(self) -> float:
        motion = self.context.motion if self.context else None
        return max(motion.duration if motion else 0.0, MIN_TRANSIT_DURATION)

    def tip_target(self, t: float) -> TipTarget:
        if self.goal_tip is None:
            goal = TipTarget(STOW_TIP)
        else:
            u, z, roll = self.goal_tip
            goal = self.context.anchor.tip(u, z, roll, self.standoff, base_u=self.goal_u)
        return blend_tips(self.context.start_tip, goal, t, self.duration)


@dataclass(frozen=True)
class MissionPlan:
    room: RoomModel
    paint: PaintPlan
    activities: Tuple[Activity, ...] = field(default_factory=tuple)

    @property
    def start_pose(self) -> Tuple[float, float, float]:
        post = self.paint.walls[0].posts[0]
        return post.pose


def _first_tip(wall_plan: WallPlan) -> Tuple[float, float, float]:
    first = wall_plan.core_paths[0][0]
    return first.u, first.z, first.roll


def _wall_activities(wall_plan: WallPlan, k: int, v_max: float, a_max: float) -> List[Activity]:
    activities: List[Activity] = []
    by_index = {s.index: s for s in wall_plan.strips}
    posts: List[BasePost] = wall_plan.posts
    for p, post in enumerate(posts):
        waypoints = wall_plan.core_paths[p]
        if len(waypoints) < 2:
            continue
        strips = sorted((by_index[i] for i in post.strip_indices), key=lambda s: s.u)
        path = TipPath(waypoints)
        for strip, window in zip(strips, strip_windows(waypoints, strips)):
            if window[1] - window[0] <= 1e-9:
                continue
            activities.append(CoreStripActivity(
                MissionPhase.PAINT_CORE_STRIP, k, strip.index, wall_plan.standoff,
                path=path, window=window, post_u=post.u))
        if p + 1 < len(posts) and len(wall_plan.core_paths[p + 1]) > 1:
            nxt = wall_plan.core_paths[p + 1][0]
            activities.append(AdvancePostActivity(
                MissionPhase.ADVANCE_POST, k, None, wall_plan.standoff,
                goal_pose=posts[p + 1].pose, goal_tip=(nxt.u, nxt.z, nxt.roll), goal_u=posts[p + 1].u,
                v_max=v_max, a_max=a_max))
    if len(wall_plan.outline_path) > 1:
        activities.append(OutlineActivity(
            MissionPhase.PAINT_OUTLINE, k, None, wall_plan.standoff,
            path=TipPath(wall_plan.outline_path), base_limits=wall_plan.base_limits))
    return activities


def build_mission_plan(room: RoomModel, paint: Optional[PaintPlan] = None,
                       v_max: float = BASE_SPEED_CAP, a_max: float = BASE_ACCEL) -> MissionPlan:
    """Activities for the four walls in counterclockwise order, from the first post to the final turn"""
    if paint is None:
        paint = plan_paint(room.walls())
    if len(paint.walls) != WALL_COUNT:
        raise ValueError(f"a room plan needs {WALL_COUNT} walls, got {len(paint.walls)}")

    first = paint.walls[0]
    activities: List[Activity] = [TransitActivity(
        MissionPhase.NAVIGATE_TO_START, 0, None, first.standoff,
        waypoints=(first.posts[0].pose,), goal_tip=_first_tip(first), goal_wall=0, goal_u=first.posts[0].u,
        v_max=v_max, a_max=a_max)]

    for k, wall_plan in enumerate(paint.walls):
        activities.extend(_wall_activities(wall_plan, k, v_max, a_max))
        width = wall_plan.wall.width
        turn_at = wall_plan.wall.to_world(width - wall_plan.base_distance, wall_plan.base_distance)
        heading = wall_plan.wall.heading
        waypoints = [(turn_at[0], turn_at[1], heading), (turn_at[0], turn_at[1], wrap_angle(heading + math.pi / 2))]
        goal_tip, goal_wall, goal_u = None, None, 0.0
        if k + 1 < WALL_COUNT:
            nxt = paint.walls[k + 1]
            waypoints.append(nxt.posts[0].pose)
            goal_tip, goal_wall, goal_u = _first_tip(nxt), k + 1, nxt.posts[0].u
        activities.append(TransitActivity(
            MissionPhase.ROTATE_TO_NEXT_WALL, k, None, wall_plan.standoff,
            waypoints=tuple(waypoints), goal_tip=goal_tip, goal_wall=goal_wall, goal_u=goal_u,
            v_max=v_max, a_max=a_max))

    logger.info("mission plan for %s: %d activities", room.name, len(activities))
    return MissionPlan(room, paint, tuple(activities))

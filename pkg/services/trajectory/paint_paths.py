"""Timed tip paths in wall coordinates and the per-wall / per-room paint plan."""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import TrajectoryError
from .quintic import SegmentChain, quintic_segment
from .strip_planner import (
    CORE_HEIGHT,
    DEFAULT_STANDOFF,
    OUTLINE_ROLL,
    STRIPS_PER_POST,
    TIP_REACH,
    base_limits,
    check_offsets,
    paintable_region,
    plan_base_posts,
    plan_wall_strips,
    validate_standoff,
)
from .trajectory_schema import BasePost, PaintPlan, PaintStrip, TipWaypoint, WallPlan, WallSpec

logger = logging.getLogger(__name__)

PASS_DURATION = 10.0  # one full-height strip
TIP_SPEED = CORE_HEIGHT / PASS_DURATION
SHIFT_DURATION = 0.35
TRANSIT_SPEED = 0.8  # spray-off repositioning
MIN_TRANSIT = 0.2
EDGE_INSET = 0.025  # half the rolled pattern along the wall

_EPS = 1e-9


@dataclass(frozen=True)
class TipSample:
    position: np.ndarray  # (u, z)
    velocity: np.ndarray
    acceleration: np.ndarray
    roll: float
    spray_on: bool


class TipPath:
    """Quintic legs between consecutive waypoints over (u, z, roll)"""

    def __init__(self, waypoints: Sequence[TipWaypoint]):
        if len(waypoints) < 2:
            raise TrajectoryError("a tip path needs at least two waypoints")
        legs, spray = [], []
        for a, b in zip(waypoints[:-1], waypoints[1:]):
            duration = b.t - a.t
            if duration <= _EPS:
                continue
            legs.append(quintic_segment([a.u, a.z, a.roll], [b.u, b.z, b.roll], duration))
            spray.append(a.spray_on)
        self.waypoints = list(waypoints)
        self.chain = SegmentChain(legs, start_time=waypoints[0].t)
        self.spray = spray

    @property
    def start_time(self) -> float:
        return self.chain.start_time

    @property
    def end_time(self) -> float:
        return self.chain.end_time

    @property
    def duration(self) -> float:
        return self.end_time - self.start_time

    def sample(self, t: float) -> TipSample:
        index = self.chain.locate(t)
        pos, vel, acc = self.chain.sample(t)
        spray_on = self.spray[index] and self.start_time <= t < self.end_time
        return TipSample(pos[:2], vel[:2], acc[:2], float(pos[2]), bool(spray_on))

    def spray_legs(self) -> List[Tuple[float, float, float]]:
        """(start, end, roll) of each spray-on leg"""
        legs = []
        for start, seg, on in zip(self.chain.start_times, self.chain.segments, self.spray):
            if on:
                legs.append((float(start), float(start + seg.duration), float(seg.q0[2])))
        return legs

    @property
    def spray_on_time(self) -> float:
        return sum(end - start for start, end, _ in self.spray_legs())


class _PathBuilder:
    def __init__(self, t: float, u: float, z: float, roll: float):
        self.points = [TipWaypoint(t=t, u=u, z=z, roll=roll)]

    @property
    def last(self) -> TipWaypoint:
        return self.points[-1]

    def leg(self, u: float, z: float, duration: float, spray_on: bool, roll: Optional[float] = None) -> None:
        last = self.last
        last.spray_on = spray_on
        self.points.append(TipWaypoint(t=last.t + duration, u=u, z=z,
                                       roll=last.roll if roll is None else roll))

    def transit(self, u: float, z: float, shift_duration: float) -> None:
        du, dz = abs(u - self.last.u), abs(z - self.last.z)
        if du < _EPS and dz < _EPS:
            return
        floor = shift_duration if du > _EPS else MIN_TRANSIT
        self.leg(u, z, max(floor, dz / TRANSIT_SPEED, du / TRANSIT_SPEED), spray_on=False)


def strip_goes_up(strip: PaintStrip) -> bool:
    """Boustrophedon parity: even strips are painted bottom to top"""
    return strip.index % 2 == 0


def core_strip_start(strip: PaintStrip) -> Tuple[float, float]:
    """(u, z) where painting of the strip begins"""
    if not strip.runs:
        return strip.u, strip.z_bottom
    z = strip.runs[0][0] if strip_goes_up(strip) else strip.runs[-1][1]
    return strip.u, z


def plan_core_path(strips: Sequence[PaintStrip], post: Optional[BasePost] = None, start_time: float = 0.0,
                   pass_duration: float = PASS_DURATION,
                   shift_duration: float = SHIFT_DURATION) -> List[TipWaypoint]:
    """Boustrophedon over the strips of one post: pass, shift, pass, ...

    Waypoints are in wall coordinates. A full 2.45 m pass takes pass_duration;
    shorter sub-runs scale with their length.
    """
    core = sorted((s for s in strips if s.section == "core"), key=lambda s: s.u)
    if not core:
        return []
    if len(core) > STRIPS_PER_POST:
        raise TrajectoryError(f"{len(core)} strips assigned to one post (max {STRIPS_PER_POST})")
    if post is not None:
        check_offsets(core, post.u)
    speed = CORE_HEIGHT / pass_duration

    u0, z0 = core_strip_start(core[0])
    path = _PathBuilder(start_time, u0, z0, 0.0)
    for strip in core:
        runs = [(a, b) if strip_goes_up(strip) else (b, a)
                for a, b in (strip.runs if strip_goes_up(strip) else reversed(strip.runs))]
        for z_from, z_to in runs:
            path.transit(strip.u, z_from, shift_duration)
            path.leg(strip.u, z_to, abs(z_to - z_from) / speed, spray_on=True)
    return path.points


def plan_outline_path(wall: WallSpec, outline: Optional[PaintStrip] = None, start_time: float = 0.0,
                      pass_duration: float = PASS_DURATION) -> List[TipWaypoint]:
    """Single horizontal pass along the top band, painted while the base reverses.

    The gun is rolled 90 degrees; the tip runs from the far end of the wall
    back to its start at the core tip speed.
    """
    if outline is None:
        outline = next((s for s in plan_wall_strips(wall.width, wall.height, wall.openings, wall.wall_id)
                        if s.section == "outline"), None)
    if outline is None or not outline.runs:
        return []
    speed = CORE_HEIGHT / pass_duration
    z = 0.5 * (outline.z_bottom + outline.z_top)
    runs = []
    for a, b in reversed(outline.runs):
        start, end = min(b, wall.width - EDGE_INSET), max(a, EDGE_INSET)
        if start - end > _EPS:
            runs.append((start, end))
    if not runs:
        return []

    path = _PathBuilder(start_time, runs[0][0], z, OUTLINE_ROLL)
    for u_from, u_to in runs:
        path.transit(u_from, z, SHIFT_DURATION)
        path.leg(u_to, z, (u_from - u_to) / speed, spray_on=True)
    return path.points


def plan_wall(wall: WallSpec, standoff: float = DEFAULT_STANDOFF, tip_reach: float = TIP_REACH,
              pass_duration: float = PASS_DURATION) -> WallPlan:
    validate_standoff(standoff)
    strips = plan_wall_strips(wall.width, wall.height, wall.openings, wall.wall_id)
    core = [s for s in strips if s.section == "core"]
    outline = next((s for s in strips if s.section == "outline"), None)
    posts = plan_base_posts(core, standoff, wall, tip_reach)

    by_index = {s.index: s for s in core}
    core_paths = [plan_core_path([by_index[i] for i in post.strip_indices], post, 0.0, pass_duration)
                  for post in posts]
    outline_path = plan_outline_path(wall, outline, 0.0, pass_duration)

    spray_on_time = sum(TipPath(p).spray_on_time for p in core_paths if len(p) > 1)
    if len(outline_path) > 1:
        spray_on_time += TipPath(outline_path).spray_on_time
    return WallPlan(
        wall=wall, standoff=standoff, base_distance=tip_reach + standoff,
        strips=core, outline=outline, posts=posts, core_paths=core_paths,
        outline_path=outline_path, base_limits=base_limits(wall),
        paint_area=paintable_region(wall).area, spray_on_time=spray_on_time,
    )


def plan_paint(walls: Sequence[WallSpec], standoff: float = DEFAULT_STANDOFF,
               tip_reach: float = TIP_REACH, pass_duration: float = PASS_DURATION) -> PaintPlan:
    """Plan every wall in the given order"""
    wall_plans = [plan_wall(wall, standoff, tip_reach, pass_duration) for wall in walls]
    plan = PaintPlan(standoff=standoff, walls=wall_plans,
                     total_paint_area=sum(w.paint_area for w in wall_plans))
    logger.info("Paint plan: %d walls, %d posts, %d strips, %.2f m^2",
                len(wall_plans), len(plan.posts), plan.strip_count, plan.total_paint_area)
    return plan

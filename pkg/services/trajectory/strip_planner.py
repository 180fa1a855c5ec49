"""Vertical strip decomposition of a wall and grouping of strips into base posts."""
import logging
import math
from typing import List, Optional, Sequence, Tuple

from shapely import union_all
from shapely.geometry import Polygon, box

from .exceptions import StripOutOfLateralRange, TrajectoryError, WallTooNarrow, WallTooTall
from .trajectory_schema import BasePost, Opening, PaintStrip, WallSpec

logger = logging.getLogger(__name__)

STRIP_WIDTH = 0.25
STRIP_OVERLAP = 0.01
STRIP_PITCH = STRIP_WIDTH - STRIP_OVERLAP
CORE_HEIGHT = 2.45
MAX_WALL_HEIGHT = 2.70
OUTLINE_ROLL = math.pi / 2

STRIPS_PER_POST = 4
MAX_LATERAL_OFFSET = 0.5
DEFAULT_STANDOFF = 0.175
STANDOFF_RANGE = (0.10, 0.25)
TIP_REACH = 0.45  # base centerline to nozzle along the wall normal
REAR_CLEARANCE = 0.45  # base origin to rearmost point
FRONT_CLEARANCE = 0.50  # base origin to front bumper plus margin

_EPS = 1e-9
_MIN_GAP = 1e-6
_JAMB_TOL = 1e-5


def subtract_intervals(interval: Tuple[float, float],
                       cuts: Sequence[Tuple[float, float]]) -> List[Tuple[float, float]]:
    """interval minus the union of cuts, as sorted disjoint pieces"""
    pieces = [interval]
    for lo, hi in sorted(cuts):
        remaining = []
        for a, b in pieces:
            if hi <= a or lo >= b:
                remaining.append((a, b))
                continue
            if lo > a:
                remaining.append((a, lo))
            if hi < b:
                remaining.append((hi, b))
        pieces = remaining
    return [(a, b) for a, b in pieces if b - a > _EPS]


def strip_count(width: float) -> int:
    if width < STRIP_WIDTH - _EPS:
        raise WallTooNarrow(width, STRIP_WIDTH)
    return 1 + math.ceil((width - STRIP_WIDTH) / STRIP_PITCH - _EPS)


def strip_centres(width: float) -> List[float]:
    """Centres at the 0.24 m pitch; the last one is right-aligned to the wall edge"""
    n = strip_count(width)
    centres = [0.5 * STRIP_WIDTH + STRIP_PITCH * i for i in range(n - 1)]
    centres.append(width - 0.5 * STRIP_WIDTH)
    return centres


def _overlaps(opening: Opening, lo: float, hi: float, axis: str) -> bool:
    """True when the opening reaches into the stroke band [lo, hi] on the given axis"""
    if axis == "u":
        return min(opening.u_max, hi) - max(opening.u_min, lo) > _EPS
    return min(opening.z_max, hi) - max(opening.z_min, lo) > _EPS


def _vertical_runs(lo: float, hi: float, z_range: Tuple[float, float],
                   openings: Sequence[Opening]) -> List[Tuple[float, float]]:
    cuts = [(o.z_min, o.z_max) for o in openings if _overlaps(o, lo, hi, "u")]
    return subtract_intervals(z_range, cuts)


def _infill_centres(u_lo: float, u_hi: float, width: float, flush_right: bool) -> List[float]:
    """Strip centres covering [u_lo, u_hi], stepping away from the flush edge at the strip pitch"""
    half = 0.5 * STRIP_WIDTH
    centres = []
    if flush_right:
        u = max(u_hi - half, half)
        while True:
            centres.append(u)
            if u - half <= u_lo + _EPS or u <= half + _EPS:
                return centres
            u = max(u - STRIP_PITCH, half)
    u = min(u_lo + half, width - half)
    while True:
        centres.append(u)
        if u + half >= u_hi - _EPS or u >= width - half - _EPS:
            return centres
        u = min(u + STRIP_PITCH, width - half)


def _infill_strips(width: float, core_top: float, openings: Sequence[Opening],
                   strips: Sequence[PaintStrip], wall_id: int) -> List[PaintStrip]:
    """Strips flush against opening jambs for the wall left bare by clipped strokes"""
    region = box(0.0, 0.0, width, core_top)
    for o in openings:
        region = region.difference(box(o.u_min, o.z_min, o.u_max, o.z_max))
    painted = union_all([box(s.u_min, a, s.u_max, b) for s in strips for a, b in s.runs])
    # opening then closing drops rounding slivers along strip edges
    bare = (region.difference(painted)
            .buffer(-_MIN_GAP, join_style="mitre")
            .buffer(_MIN_GAP, join_style="mitre"))

    heights = [0.0, core_top] + [z for o in openings for z in (o.z_min, o.z_max)]

    def snap(z: float) -> float:
        return next((h for h in heights if abs(h - z) < _JAMB_TOL), z)

    infill: List[PaintStrip] = []
    for gap in getattr(bare, "geoms", [bare]):
        if gap.is_empty:
            continue
        u_lo, z_lo, u_hi, z_hi = gap.bounds
        z_lo, z_hi = snap(z_lo), snap(z_hi)
        left_jamb = next((o.u_min for o in openings if abs(o.u_min - u_hi) < _JAMB_TOL), None)
        right_jamb = next((o.u_max for o in openings if abs(o.u_max - u_lo) < _JAMB_TOL), None)
        u_hi = left_jamb if left_jamb is not None else u_hi
        u_lo = right_jamb if right_jamb is not None else u_lo
        for u in _infill_centres(u_lo, u_hi, width, flush_right=left_jamb is not None):
            runs = _vertical_runs(u - 0.5 * STRIP_WIDTH, u + 0.5 * STRIP_WIDTH, (z_lo, z_hi), openings)
            if not runs:
                logger.warning("Wall %d: no room for a strip beside the opening at u %.3f", wall_id, u)
                continue
            infill.append(PaintStrip(
                wall_id=wall_id, index=len(strips) + len(infill), section="core", u=u,
                length=STRIP_WIDTH, z_bottom=0.0, z_top=core_top, roll=0.0, runs=runs,
            ))
    return infill


def plan_wall_strips(width: float, height: float, openings: Sequence[Opening] = (),
                     wall_id: int = 0) -> List[PaintStrip]:
    """Core strips over z in [0, 2.45] followed by the outline band when the wall is taller.

    Every stroke that reaches into an opening is cut over the opening's height,
    so no stroke sprays across a door or window. Where a cut stroke only
    partly overlapped the opening, extra core strips flush with the jamb
    (indexed after the regular strips) paint the wall it left bare.
    """
    if height > MAX_WALL_HEIGHT + _EPS:
        raise WallTooTall(height, MAX_WALL_HEIGHT)
    if height <= 0.0:
        raise TrajectoryError(f"wall height must be positive, got {height}")
    core_top = min(height, CORE_HEIGHT)
    strips = []
    for index, u in enumerate(strip_centres(width)):
        lo, hi = u - 0.5 * STRIP_WIDTH, u + 0.5 * STRIP_WIDTH
        strips.append(PaintStrip(
            wall_id=wall_id, index=index, section="core", u=u, length=STRIP_WIDTH,
            z_bottom=0.0, z_top=core_top, roll=0.0,
            runs=_vertical_runs(lo, hi, (0.0, core_top), openings),
        ))
    if openings:
        infill = _infill_strips(width, core_top, openings, strips, wall_id)
        if infill:
            logger.debug("Wall %d: %d infill strips beside openings", wall_id, len(infill))
        strips.extend(infill)

    if height > CORE_HEIGHT + _EPS:
        cuts = [(o.u_min, o.u_max) for o in openings if _overlaps(o, CORE_HEIGHT, height, "z")]
        strips.append(PaintStrip(
            wall_id=wall_id, index=len(strips), section="outline", u=0.5 * width, length=width,
            width=STRIP_WIDTH, z_bottom=CORE_HEIGHT, z_top=height, roll=OUTLINE_ROLL,
            runs=subtract_intervals((0.0, width), cuts),
        ))
    logger.debug("Wall %d: %d strips for %.2f x %.2f m with %d openings",
                 wall_id, len(strips), width, height, len(openings))
    return strips


def validate_standoff(standoff: float) -> float:
    lo, hi = STANDOFF_RANGE
    if not lo - _EPS <= standoff <= hi + _EPS:
        raise TrajectoryError(f"standoff {standoff} m outside [{lo}, {hi}] m")
    return standoff


def base_limits(wall: WallSpec, rear: float = REAR_CLEARANCE,
                front: float = FRONT_CLEARANCE) -> Tuple[float, float]:
    """Range of base u keeping the chassis clear of the two adjoining walls"""
    lo, hi = rear, wall.width - front
    if lo > hi:
        mid = 0.5 * wall.width
        logger.warning("Wall %d is %.2f m wide; base cannot clear both ends", wall.wall_id, wall.width)
        return mid, mid
    return lo, hi


def check_offsets(strips: Sequence[PaintStrip], post_u: float) -> List[float]:
    offsets = [s.u - post_u for s in strips]
    for offset in offsets:
        if abs(offset) > MAX_LATERAL_OFFSET + _EPS:
            raise StripOutOfLateralRange(offset, MAX_LATERAL_OFFSET)
    return offsets


def plan_base_posts(strips: Sequence[PaintStrip], standoff: float = DEFAULT_STANDOFF,
                    wall: Optional[WallSpec] = None, tip_reach: float = TIP_REACH) -> List[BasePost]:
    """Groups consecutive core strips four at a time, one post per group.

    The post sits on the group's centre, clamped (when the wall is given) so
    the chassis clears the adjoining walls, facing along the wall at tip_reach + standoff from it.
    """
    validate_standoff(standoff)
    core = sorted((s for s in strips if s.section == "core"), key=lambda s: s.u)
    if not core:
        return []
    if wall is None:
        # free-standing wall: nothing to clear at either end
        wall = WallSpec(wall_id=core[0].wall_id, width=core[-1].u_max, height=core[0].z_top)
        lo, hi = -math.inf, math.inf
    else:
        lo, hi = base_limits(wall)
    distance = tip_reach + standoff

    posts = []
    for start in range(0, len(core), STRIPS_PER_POST):
        group = core[start:start + STRIPS_PER_POST]
        centre = 0.5 * (group[0].u + group[-1].u)
        u = min(max(centre, lo), hi)
        offsets = check_offsets(group, u)
        x, y = wall.to_world(u, distance)
        posts.append(BasePost(
            index=len(posts), wall_id=wall.wall_id, u=u, pose=(x, y, wall.heading),
            strip_indices=[s.index for s in group], offsets=offsets,
        ))
    logger.debug("Wall %d: %d posts", wall.wall_id, len(posts))
    return posts


def paintable_region(wall: WallSpec) -> Polygon:
    """Wall rectangle minus its openings, in (u, z)"""
    region = box(0.0, 0.0, wall.width, wall.height)
    for opening in wall.openings:
        region = region.difference(box(opening.u_min, opening.z_min, opening.u_max, opening.z_max))
    return region

"""Rectangular room with known openings and disc obstacles.

World frame: origin at the front-right corner, x along the front wall and y
along the right wall, both into the room. Wall k is traversed along
t_k = R(k pi/2) (0, -1), so the walls come in counterclockwise painting order
and the room always lies on the left of the direction of travel.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from services.trajectory.trajectory_schema import Opening, WallSpec
from .exceptions import RoomError
from .mission_schema import ObstacleDocument, RoomDocument

logger = logging.getLogger(__name__)

WALL_COUNT = 4
DEFAULT_SENSOR_HEIGHT = 0.30


@dataclass(frozen=True)
class Obstacle:
    x: float
    y: float
    radius: float
    moving: bool = False
    velocity: Tuple[float, float] = (0.0, 0.0)
    appear_at: float = 0.0
    disappear_at: Optional[float] = None

    def present(self, t: float) -> bool:
        return t >= self.appear_at and (self.disappear_at is None or t < self.disappear_at)

    def centre(self, t: float) -> Tuple[float, float]:
        if not self.moving:
            return self.x, self.y
        elapsed = max(0.0, t - self.appear_at)
        return self.x + self.velocity[0] * elapsed, self.y + self.velocity[1] * elapsed

    @classmethod
    def from_document(cls, doc: ObstacleDocument) -> 'Obstacle':
        return cls(doc.x, doc.y, doc.radius, doc.kind == "moving", tuple(doc.velocity),
                   doc.appear_at, doc.disappear_at)


@dataclass(frozen=True)
class RayHit:
    distance: float
    target: str
    index: int
    through_opening: bool = False


@dataclass(frozen=True)
class RoomModel:
    name: str
    Lx: float
    Ly: float
    height: float
    openings: Dict[int, Tuple[Opening, ...]] = field(default_factory=dict)
    obstacles: Tuple[Obstacle, ...] = ()
    start_pose: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    sensor_height: float = DEFAULT_SENSOR_HEIGHT

    # -- wall geometry ---------------------------------------------------------------

    def wall_direction(self, k: int) -> Tuple[float, float]:
        angle = (k % WALL_COUNT) * math.pi / 2.0
        return _clean(math.sin(angle)), _clean(-math.cos(angle))

    def wall_start(self, k: int) -> Tuple[float, float]:
        return ((0.0, self.Ly), (0.0, 0.0), (self.Lx, 0.0), (self.Lx, self.Ly))[k % WALL_COUNT]

    def wall_length(self, k: int) -> float:
        return self.Ly if k % 2 == 0 else self.Lx

    def wall_heading(self, k: int) -> float:
        dx, dy = self.wall_direction(k)
        return math.atan2(dy, dx)

    def wall_spec(self, k: int) -> WallSpec:
        return WallSpec(
            wall_id=k,
            width=self.wall_length(k),
            height=self.height,
            openings=list(self.openings.get(k, ())),
            start=self.wall_start(k),
            direction=self.wall_direction(k),
        )

    def walls(self) -> List[WallSpec]:
        return [self.wall_spec(k) for k in range(WALL_COUNT)]

    def wall_coordinates(self, k: int, point: Sequence[float]) -> Tuple[float, float]:
        """(u along wall k, distance from wall k into the room) of a world point"""
        sx, sy = self.wall_start(k)
        dx, dy = self.wall_direction(k)
        rx, ry = point[0] - sx, point[1] - sy
        return rx * dx + ry * dy, -rx * dy + ry * dx

    def contains(self, point: Sequence[float], margin: float = 0.0) -> bool:
        return margin <= point[0] <= self.Lx - margin and margin <= point[1] <= self.Ly - margin

    @property
    def wall_area(self) -> float:
        return 2.0 * (self.Lx + self.Ly) * self.height

    @property
    def opening_area(self) -> float:
        return sum((o.u_max - o.u_min) * (o.z_max - o.z_min) for ops in self.openings.values() for o in ops)

    # -- sensing ---------------------------------------------------------------------

    def _wall_hit(self, origin: np.ndarray, direction: np.ndarray) -> Tuple[float, int]:
        best, best_wall = math.inf, -1
        # wall index for each boundary line: x = 0 is wall 0, y = 0 wall 1, x = Lx wall 2, y = Ly wall 3
        for axis, bound, wall in ((0, 0.0, 0), (1, 0.0, 1), (0, self.Lx, 2), (1, self.Ly, 3)):
            d = direction[axis]
            if abs(d) < 1e-12:
                continue
            s = (bound - origin[axis]) / d
            if 0.0 <= s < best:
                best, best_wall = s, wall
        return best, best_wall

    def _in_opening(self, wall: int, u: float, z: float) -> bool:
        return any(o.u_min <= u <= o.u_max and o.z_min <= z <= o.z_max for o in self.openings.get(wall, ()))

    def ray_cast(self, origin: Sequence[float], direction: Sequence[float], t: float = 0.0,
                 include_obstacles: bool = True) -> Optional[RayHit]:
        """First surface along a horizontal ray at sensor height; None when nothing is hit.

        A ray that reaches a wall inside a known opening leaves the room and is
        reported with an infinite distance.
        """
        origin = np.asarray(origin, dtype=float)
        direction = np.asarray(direction, dtype=float)
        direction = direction / np.linalg.norm(direction)
        distance, wall = self._wall_hit(origin, direction)
        hit = None
        if wall >= 0:
            point = origin + distance * direction
            u, _ = self.wall_coordinates(wall, point)
            if self._in_opening(wall, u, self.sensor_height):
                hit = RayHit(math.inf, "wall", wall, through_opening=True)
            else:
                hit = RayHit(float(distance), "wall", wall)
        if include_obstacles:
            for index, obstacle in enumerate(self.obstacles):
                if not obstacle.present(t):
                    continue
                s = _disc_intersection(origin, direction, obstacle.centre(t), obstacle.radius)
                if s is not None and (hit is None or s < hit.distance):
                    hit = RayHit(s, "obstacle", index)
        return hit


def _clean(value: float) -> float:
    return 0.0 if abs(value) < 1e-12 else float(round(value))


def _disc_intersection(origin: np.ndarray, direction: np.ndarray,
                       centre: Tuple[float, float], radius: float) -> Optional[float]:
    offset = origin - np.asarray(centre)
    b = float(offset @ direction)
    c = float(offset @ offset) - radius * radius
    disc = b * b - c
    if disc < 0.0:
        return None
    root = math.sqrt(disc)
    for s in (-b - root, -b + root):
        if s >= 0.0:
            return s
    return None


def room_from_document(document: dict) -> RoomModel:
    """Validate a room document and build the model"""
    try:
        doc = RoomDocument.model_validate(document)
    except ValidationError as e:
        raise RoomError(f"invalid room document: {e}") from e
    lx, ly = doc.footprint.Lx, doc.footprint.Ly
    openings: Dict[int, Tuple[Opening, ...]] = {}
    for wall in doc.walls:
        length = ly if wall.id % 2 == 0 else lx
        for opening in wall.openings:
            if opening.u_min < 0.0 or opening.u_max > length or opening.z_min < 0.0 or opening.z_max > doc.height:
                raise RoomError(f"opening {opening.kind} on wall {wall.id} lies outside the wall extents")
        openings[wall.id] = openings.get(wall.id, ()) + tuple(wall.openings)
    x, y, _ = doc.start_pose
    if not (0.0 < x < lx and 0.0 < y < ly):
        raise RoomError(f"start pose ({x}, {y}) is outside the room")
    room = RoomModel(
        name=doc.name,
        Lx=lx,
        Ly=ly,
        height=doc.height,
        openings=openings,
        obstacles=tuple(Obstacle.from_document(o) for o in doc.obstacles),
        start_pose=tuple(doc.start_pose),
    )
    logger.info("room %s: %.2f x %.2f x %.2f m, %d openings, %d obstacles",
                room.name, lx, ly, doc.height, sum(len(v) for v in openings.values()), len(room.obstacles))
    return room


def load_room(path: str) -> RoomModel:
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = json.load(f)
    except FileNotFoundError as e:
        raise RoomError(f"room file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise RoomError(f"room file {path} is not valid JSON: {e}") from e
    return room_from_document(document)

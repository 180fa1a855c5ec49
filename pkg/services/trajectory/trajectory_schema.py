import math
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator


class Opening(BaseModel):
    """Door or window rectangle in wall coordinates (u along the wall, z up)"""
    kind: Literal["door", "window", "opening"] = "opening"
    u_min: float
    u_max: float
    z_min: float
    z_max: float

    @model_validator(mode="after")
    def _ordered(self) -> 'Opening':
        if self.u_max <= self.u_min or self.z_max <= self.z_min:
            raise ValueError(f"opening bounds must be increasing: u [{self.u_min}, {self.u_max}], "
                             f"z [{self.z_min}, {self.z_max}]")
        return self


class WallSpec(BaseModel):
    """One wall as the planner sees it.

    u runs from ``start`` along ``direction``; the room lies on the left of the
    direction of travel, so the robot paints with the wall on its right.
    """
    wall_id: int = 0
    width: float
    height: float
    openings: List[Opening] = Field(default_factory=list)
    start: Tuple[float, float] = (0.0, 0.0)
    direction: Tuple[float, float] = (1.0, 0.0)

    @property
    def inward_normal(self) -> Tuple[float, float]:
        dx, dy = self.direction
        return -dy, dx

    @property
    def heading(self) -> float:
        return math.atan2(self.direction[1], self.direction[0])

    def to_world(self, u: float, offset: float = 0.0) -> Tuple[float, float]:
        """World (x, y) of the point u along the wall and offset into the room"""
        nx, ny = self.inward_normal
        return (self.start[0] + u * self.direction[0] + offset * nx,
                self.start[1] + u * self.direction[1] + offset * ny)


class PaintStrip(BaseModel):
    """One spray stroke band.

    Core strips are vertical: u is the strip centre and runs are z intervals.
    The outline strip is the horizontal top band: u is the band centre along
    the wall and runs are u intervals.
    """
    wall_id: int
    index: int
    section: Literal["core", "outline"]
    u: float
    length: float
    width: float = 0.25
    z_bottom: float
    z_top: float
    roll: float = 0.0
    runs: List[Tuple[float, float]] = Field(default_factory=list)

    @property
    def u_min(self) -> float:
        return self.u - 0.5 * self.length

    @property
    def u_max(self) -> float:
        return self.u + 0.5 * self.length

    @property
    def run_length(self) -> float:
        return sum(b - a for a, b in self.runs)

    @property
    def nominal_area(self) -> float:
        return self.run_length * self.width


class TipWaypoint(BaseModel):
    """Tip target in wall coordinates; spray_on applies to the leg that starts here"""
    t: float
    u: float
    z: float
    roll: float = 0.0
    spray_on: bool = False


class BasePost(BaseModel):
    """Fixed base pose from which up to four core strips are painted"""
    index: int
    wall_id: int
    u: float
    pose: Tuple[float, float, float]
    strip_indices: List[int]
    offsets: List[float]


class WallPlan(BaseModel):
    wall: WallSpec
    standoff: float
    base_distance: float
    strips: List[PaintStrip]
    outline: Optional[PaintStrip] = None
    posts: List[BasePost]
    core_paths: List[List[TipWaypoint]]
    outline_path: List[TipWaypoint] = Field(default_factory=list)
    base_limits: Tuple[float, float]
    paint_area: float
    spray_on_time: float


class PaintPlan(BaseModel):
    """Room plan: walls in painting order"""
    schema_version: int = 1
    standoff: float
    walls: List[WallPlan]
    total_paint_area: float

    @property
    def posts(self) -> List[BasePost]:
        return [post for wall in self.walls for post in wall.posts]

    @property
    def strip_count(self) -> int:
        return sum(len(wall.strips) for wall in self.walls)

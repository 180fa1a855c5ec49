from enum import Enum
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field

from services.trajectory.trajectory_schema import Opening


# ---------------------------------------------------------------------------
# Room file
# ---------------------------------------------------------------------------

class Footprint(BaseModel):
    """Room size; x runs along the front wall, y along the right wall"""
    Lx: float = Field(gt=0.0)
    Ly: float = Field(gt=0.0)


class WallDocument(BaseModel):
    """Openings of one wall; u is measured along the painting direction of that wall"""
    id: int = Field(ge=0, le=3)
    openings: List[Opening] = Field(default_factory=list)


class ObstacleDocument(BaseModel):
    """Disc obstacle; moving discs travel at constant velocity while present"""
    x: float
    y: float
    radius: float = Field(gt=0.0)
    kind: Literal["static", "moving"] = "static"
    velocity: Tuple[float, float] = (0.0, 0.0)
    appear_at: float = 0.0
    disappear_at: Optional[float] = None


class RoomDocument(BaseModel):
    name: str = "room"
    footprint: Footprint
    height: float = Field(gt=0.0)
    walls: List[WallDocument] = Field(default_factory=list)
    obstacles: List[ObstacleDocument] = Field(default_factory=list)
    start_pose: Tuple[float, float, float]


# ---------------------------------------------------------------------------
# Mission records
# ---------------------------------------------------------------------------

class MissionPhase(str, Enum):
    INIT = "Init"
    SEEK_RELIABLE_LOCATION = "SeekReliableLocation"
    MEASURE_ORIENTATION = "MeasureOrientation"
    REGISTER_WORLD_FRAME = "RegisterWorldFrame"
    NAVIGATE_TO_START = "NavigateToStart"
    PAINT_CORE_STRIP = "PaintCoreStrip"
    PAINT_OUTLINE = "PaintOutline"
    ADVANCE_POST = "AdvancePost"
    ROTATE_TO_NEXT_WALL = "RotateToNextWall"
    PAUSED = "Paused"
    TERMINATED = "Terminated"


PAINTING_PHASES = frozenset({MissionPhase.PAINT_CORE_STRIP, MissionPhase.PAINT_OUTLINE})


class PauseReason(str, Enum):
    OBSTACLE = "Obstacle"
    EMPTY_CUP = "EmptyCup"
    USER = "User"


class PauseEvent(BaseModel):
    reason: PauseReason
    phase: MissionPhase
    wall: Optional[int] = None
    strip: Optional[int] = None
    t_start: float
    t_end: Optional[float] = None


class TraceRecord(BaseModel):
    """One executive step of the JSON-lines mission trace"""
    t: float
    phase: MissionPhase
    wall: Optional[int] = None
    strip: Optional[int] = None
    true_pose: Tuple[float, float, float]
    est_pose: Tuple[float, float, float]
    u_b: Tuple[float, float]
    spray: bool
    paint_level: float

"""Raster model of paint coverage on a wall: 1 cm cells counting spray passes."""
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
import shapely

from .paint_paths import TipPath
from .strip_planner import paintable_region
from .trajectory_schema import TipWaypoint, WallPlan, WallSpec

logger = logging.getLogger(__name__)

GRID_RESOLUTION = 0.01
SPRAY_PATTERN = (0.26, 0.05)  # (long, short) side, long side horizontal at roll 0
_EPS = 1e-9


@dataclass
class CoverageMap:
    """Pass count per cell; rows are z, columns are u"""
    wall_id: int
    resolution: float
    width: float
    height: float
    thickness: np.ndarray
    paintable: np.ndarray
    paintable_area: float

    @property
    def covered(self) -> np.ndarray:
        return (self.thickness > 0) & self.paintable

    @property
    def covered_fraction(self) -> float:
        total = int(self.paintable.sum())
        return float(self.covered.sum()) / total if total else 1.0

    @property
    def overlap_fraction(self) -> float:
        """Share of covered cells that received more than one pass"""
        covered = int(self.covered.sum())
        if not covered:
            return 0.0
        return float(((self.thickness > 1) & self.paintable).sum()) / covered

    @property
    def covered_area(self) -> float:
        return float(self.covered.sum()) * self.resolution ** 2

    @property
    def overspray_area(self) -> float:
        """Painted cells outside the paintable region (openings)"""
        return float(((self.thickness > 0) & ~self.paintable).sum()) * self.resolution ** 2

    @property
    def max_passes(self) -> int:
        return int(self.thickness.max()) if self.thickness.size else 0

    def summary(self) -> dict:
        return {
            "wall_id": self.wall_id,
            "covered_fraction": self.covered_fraction,
            "overlap_fraction": self.overlap_fraction,
            "paintable_area": self.paintable_area,
            "covered_area": self.covered_area,
            "overspray_area": self.overspray_area,
            "max_passes": self.max_passes,
        }


def new_coverage_map(wall: WallSpec, resolution: float = GRID_RESOLUTION) -> CoverageMap:
    n_u = int(math.ceil(wall.width / resolution - _EPS))
    n_z = int(math.ceil(wall.height / resolution - _EPS))
    region = paintable_region(wall)
    u = (np.arange(n_u) + 0.5) * resolution
    z = (np.arange(n_z) + 0.5) * resolution
    uu, zz = np.meshgrid(u, z)
    paintable = shapely.contains_xy(region, uu, zz)
    return CoverageMap(
        wall_id=wall.wall_id, resolution=resolution, width=wall.width, height=wall.height,
        thickness=np.zeros((n_z, n_u), dtype=np.int32), paintable=paintable, paintable_area=region.area,
    )


def pattern_half_extents(roll: float, pattern: Tuple[float, float] = SPRAY_PATTERN) -> Tuple[float, float]:
    """Half sizes (along u, along z) of the pattern after rolling the gun"""
    long_side, short_side = pattern
    if abs(math.sin(roll)) > abs(math.cos(roll)):
        return 0.5 * short_side, 0.5 * long_side
    return 0.5 * long_side, 0.5 * short_side


def stamp_pass(coverage: CoverageMap, points: np.ndarray, roll: float,
               pattern: Tuple[float, float] = SPRAY_PATTERN) -> int:
    """Adds one pass swept through the (u, z) points; returns the cells touched"""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.size == 0:
        return 0
    res = coverage.resolution
    n_z, n_u = coverage.thickness.shape
    hu, hz = pattern_half_extents(roll, pattern)
    # cell i is painted when its centre (i + 0.5) * res falls inside the rectangle
    u_lo = np.clip(np.ceil((points[:, 0] - hu) / res - 0.5 - _EPS), 0, n_u).astype(int)
    u_hi = np.clip(np.floor((points[:, 0] + hu) / res - 0.5 + _EPS) + 1, 0, n_u).astype(int)
    z_lo = np.clip(np.ceil((points[:, 1] - hz) / res - 0.5 - _EPS), 0, n_z).astype(int)
    z_hi = np.clip(np.floor((points[:, 1] + hz) / res - 0.5 + _EPS) + 1, 0, n_z).astype(int)
    mask = np.zeros_like(coverage.thickness, dtype=bool)
    for a, b, c, d in zip(z_lo, z_hi, u_lo, u_hi):
        if b > a and d > c:
            mask[a:b, c:d] = True
    coverage.thickness += mask
    return int(mask.sum())


def _leg_points(path: TipPath, start: float, end: float, resolution: float) -> np.ndarray:
    p0 = path.sample(start).position
    p1 = path.sample(end - _EPS).position
    # quintic peak speed is 1.875x the mean, so sample densely enough for that
    n = int(math.ceil(2.0 * 1.875 * np.linalg.norm(p1 - p0) / resolution)) + 2
    return np.array([path.sample(t).position for t in np.linspace(start, end, n)])


def spray_coverage(tip_path: TipPath, wall: WallSpec, pattern: Tuple[float, float] = SPRAY_PATTERN,
                   resolution: float = GRID_RESOLUTION, coverage: Optional[CoverageMap] = None) -> CoverageMap:
    """Rasterize every spray-on leg of a planned path; spray-off legs paint nothing"""
    if coverage is None:
        coverage = new_coverage_map(wall, resolution)
    for start, end, roll in tip_path.spray_legs():
        stamp_pass(coverage, _leg_points(tip_path, start, end, coverage.resolution), roll, pattern)
    return coverage


def stamp_samples(coverage: CoverageMap, positions: Sequence[Sequence[float]], spray_on: Sequence[bool],
                  rolls: Sequence[float], pattern: Tuple[float, float] = SPRAY_PATTERN) -> int:
    """Rasterize recorded tip samples; each contiguous spray-on run counts as one pass"""
    positions = np.asarray(positions, dtype=float)
    spray_on = np.asarray(spray_on, dtype=bool)
    rolls = np.asarray(rolls, dtype=float)
    passes = 0
    index = 0
    n = len(spray_on)
    while index < n:
        if not spray_on[index]:
            index += 1
            continue
        end = index
        while end < n and spray_on[end]:
            end += 1
        stamp_pass(coverage, positions[index:end], float(np.median(rolls[index:end])), pattern)
        passes += 1
        index = end
    return passes


def wall_plan_coverage(plan: WallPlan, pattern: Tuple[float, float] = SPRAY_PATTERN,
                       resolution: float = GRID_RESOLUTION) -> CoverageMap:
    """Coverage the plan would achieve with perfect tracking"""
    coverage = new_coverage_map(plan.wall, resolution)
    paths: Iterable[Sequence[TipWaypoint]] = list(plan.core_paths) + [plan.outline_path]
    for waypoints in paths:
        if len(waypoints) > 1:
            spray_coverage(TipPath(waypoints), plan.wall, pattern, resolution, coverage)
    logger.debug("Wall %d planned coverage %.4f", plan.wall.wall_id, coverage.covered_fraction)
    return coverage

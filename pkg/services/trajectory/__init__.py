from .exceptions import NonpositiveDuration, StripOutOfLateralRange, TrajectoryError, WallTooNarrow, WallTooTall
from .quintic import QuinticSegment, SegmentChain, quintic_segment, sample
from .trajectory_schema import BasePost, Opening, PaintPlan, PaintStrip, TipWaypoint, WallPlan, WallSpec
from .strip_planner import (
    CORE_HEIGHT,
    DEFAULT_STANDOFF,
    MAX_LATERAL_OFFSET,
    STRIP_PITCH,
    STRIP_WIDTH,
    TIP_REACH,
    paintable_region,
    plan_base_posts,
    plan_wall_strips,
)
from .paint_paths import (
    PASS_DURATION,
    TIP_SPEED,
    TipPath,
    TipSample,
    plan_core_path,
    plan_outline_path,
    plan_paint,
    plan_wall,
)
from .coverage import CoverageMap, new_coverage_map, spray_coverage, stamp_samples, wall_plan_coverage
from .plan_export import plan_to_json, write_coverage_svg, write_plan_json, write_plan_svg

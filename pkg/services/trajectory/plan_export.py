"""Plan and coverage export: JSON documents and SVG wall views."""
import logging
import os
from typing import Optional, Sequence

import numpy as np
from matplotlib.figure import Figure
from matplotlib.patches import Rectangle

from .coverage import CoverageMap
from .trajectory_schema import PaintPlan, WallPlan

logger = logging.getLogger(__name__)


def plan_to_json(plan: PaintPlan, indent: Optional[int] = 2) -> str:
    return plan.model_dump_json(indent=indent)


def write_plan_json(plan: PaintPlan, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(plan_to_json(plan))
    logger.info("Plan written to %s", path)
    return path


def _draw_wall(ax, wall_plan: WallPlan, coverage: Optional[CoverageMap]) -> None:
    wall = wall_plan.wall
    if coverage is not None:
        image = np.ma.masked_where(coverage.thickness == 0, coverage.thickness)
        ax.imshow(image, origin="lower", cmap="viridis", alpha=0.8,
                  extent=(0.0, coverage.width, 0.0, coverage.height), interpolation="nearest")
    ax.add_patch(Rectangle((0.0, 0.0), wall.width, wall.height, fill=False, edgecolor="black", lw=1.2))
    for strip in wall_plan.strips:
        for a, b in strip.runs:
            ax.add_patch(Rectangle((strip.u_min, a), strip.length, b - a, fill=False,
                                   edgecolor="tab:blue", lw=0.5))
    if wall_plan.outline is not None:
        band = wall_plan.outline
        for a, b in band.runs:
            ax.add_patch(Rectangle((a, band.z_bottom), b - a, band.z_top - band.z_bottom,
                                   fill=False, edgecolor="tab:orange", lw=0.8))
    for opening in wall.openings:
        ax.add_patch(Rectangle((opening.u_min, opening.z_min), opening.u_max - opening.u_min,
                               opening.z_max - opening.z_min, facecolor="lightgrey",
                               edgecolor="grey", hatch="//"))
    for post in wall_plan.posts:
        ax.plot([post.u], [-0.08], marker="^", color="tab:red", markersize=5)
    ax.set_xlim(-0.1, wall.width + 0.1)
    ax.set_ylim(-0.2, wall.height + 0.1)
    ax.set_aspect("equal")
    title = f"wall {wall.wall_id}"
    if coverage is not None:
        title += f" - {100.0 * coverage.covered_fraction:.2f}% covered"
    ax.set_title(title, fontsize=8)
    ax.set_xlabel("u [m]", fontsize=7)
    ax.set_ylabel("z [m]", fontsize=7)
    ax.tick_params(labelsize=6)


def write_plan_svg(plan: PaintPlan, path: str,
                   coverages: Optional[Sequence[Optional[CoverageMap]]] = None) -> str:
    """One panel per wall: strips, outline band, openings, posts and optional coverage"""
    n = max(len(plan.walls), 1)
    fig = Figure(figsize=(4.0 * n, 3.6))
    axes = fig.subplots(1, n, squeeze=False)[0]
    for i, wall_plan in enumerate(plan.walls):
        coverage = coverages[i] if coverages is not None and i < len(coverages) else None
        _draw_wall(axes[i], wall_plan, coverage)
    fig.tight_layout()
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, format="svg")
    logger.info("Plan view written to %s", path)
    return path


def write_coverage_svg(coverage: CoverageMap, wall_plan: WallPlan, path: str) -> str:
    fig = Figure(figsize=(6.0, 4.5))
    ax = fig.subplots()
    _draw_wall(ax, wall_plan, coverage)
    fig.tight_layout()
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, format="svg")
    return path

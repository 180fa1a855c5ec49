import math

import numpy as np
import pytest

from services.trajectory import (
    NonpositiveDuration,
    Opening,
    StripOutOfLateralRange,
    TipPath,
    TipWaypoint,
    TrajectoryError,
    WallSpec,
    WallTooNarrow,
    WallTooTall,
    new_coverage_map,
    plan_base_posts,
    plan_core_path,
    plan_outline_path,
    plan_paint,
    plan_to_json,
    plan_wall,
    plan_wall_strips,
    quintic_segment,
    sample,
    spray_coverage,
    wall_plan_coverage,
    write_plan_svg,
)
from services.trajectory.trajectory_schema import BasePost

DOOR = Opening(kind="door", u_min=0.49, u_max=1.44, z_min=0.0, z_max=2.1)


def _core(strips):
    return [s for s in strips if s.section == "core"]


# -- quintic legs ---------------------------------------------------------------------

def test_quintic_boundary_conditions():
    seg = quintic_segment([0.0, 1.0], [2.0, -1.0], 4.0)
    pos, vel, acc = sample(seg, 0.0)
    np.testing.assert_allclose(pos, [0.0, 1.0])
    np.testing.assert_allclose(vel, 0.0, atol=1e-15)
    np.testing.assert_allclose(acc, 0.0, atol=1e-15)
    pos, vel, acc = sample(seg, 4.0)
    np.testing.assert_allclose(pos, [2.0, -1.0])
    np.testing.assert_allclose(vel, 0.0, atol=1e-12)
    np.testing.assert_allclose(acc, 0.0, atol=1e-12)


def test_quintic_midpoint_and_peak_velocity():
    seg = quintic_segment([1.0], [3.0], 2.0)
    pos, vel, acc = seg.sample(1.0)
    np.testing.assert_allclose(pos, [2.0])
    np.testing.assert_allclose(vel, [1.875 * 2.0 / 2.0])
    np.testing.assert_allclose(acc, [0.0], atol=1e-12)
    times = np.linspace(0.0, 2.0, 2001)
    speeds = [seg.sample(t)[1][0] for t in times]
    assert max(speeds) == pytest.approx(1.875, abs=1e-9)


def test_quintic_velocity_matches_finite_difference():
    seg = quintic_segment([0.0, 0.3], [2.45, -0.2], 10.0)
    h = 1e-6
    for t in np.linspace(h, 10.0 - h, 997):
        fd = (seg.sample(t + h)[0] - seg.sample(t - h)[0]) / (2 * h)
        assert np.max(np.abs(fd - seg.sample(t)[1])) < 1e-6


def test_quintic_coefficients_reproduce_samples():
    seg = quintic_segment([0.5], [1.5], 3.0)
    for t in (0.0, 0.7, 1.5, 2.9):
        value = np.polynomial.polynomial.polyval(t, seg.coefficients[0])
        assert value == pytest.approx(seg.sample(t)[0][0])


@pytest.mark.parametrize("duration", [0.0, -1.0])
def test_quintic_rejects_nonpositive_duration(duration):
    with pytest.raises(NonpositiveDuration):
        quintic_segment([0.0], [1.0], duration)


def test_blended_leg_is_continuous_and_cruises():
    seg = quintic_segment([0.0], [1.0], 4.0, blend_fraction=0.5)
    tb = 1.0
    for t in (tb, 4.0 - tb):
        before, after = seg.sample(t - 1e-9), seg.sample(t + 1e-9)
        for a, b in zip(before, after):
            np.testing.assert_allclose(a, b, atol=1e-6)
    cruise = seg.sample(2.0)[1][0]
    assert seg.sample(1.5)[1][0] == pytest.approx(cruise)
    assert seg.sample(2.0)[2][0] == pytest.approx(0.0)
    np.testing.assert_allclose(seg.sample(4.0)[0], [1.0])
    np.testing.assert_allclose(seg.sample(2.0)[0], [0.5])


def test_full_blend_equals_pure_quintic():
    pure = quintic_segment([0.0], [1.0], 2.0)
    blended = quintic_segment([0.0], [1.0], 2.0, blend_fraction=1.0)
    for t in (0.3, 1.0, 1.7):
        np.testing.assert_allclose(pure.sample(t)[0], blended.sample(t)[0])


# -- strips ---------------------------------------------------------------------------

def test_four_metre_wall_has_seventeen_core_strips():
    strips = plan_wall_strips(4.0, 2.7)
    core = _core(strips)
    assert len(core) == 17
    assert all(s.width == 0.25 for s in core)
    overlaps = [a.u_max - b.u_min for a, b in zip(core[:-2], core[1:-1])]
    np.testing.assert_allclose(overlaps, 0.01, atol=1e-9)
    assert core[-1].u_max == pytest.approx(4.0)
    assert core[-1].u_min - core[-2].u_min < 0.24
    assert all(s.runs == [(0.0, 2.45)] for s in core)


def test_narrowest_wall_has_one_strip():
    strips = plan_wall_strips(0.25, 2.45)
    assert len(strips) == 1
    assert strips[0].u == pytest.approx(0.125)


def test_outline_band_on_full_height_wall():
    outline = [s for s in plan_wall_strips(4.0, 2.7) if s.section == "outline"]
    assert len(outline) == 1
    band = outline[0]
    assert band.z_top - band.z_bottom == pytest.approx(0.25)
    assert band.roll == pytest.approx(math.pi / 2)


def test_wall_at_core_height_has_no_outline():
    strips = plan_wall_strips(3.0, 2.45)
    assert all(s.section == "core" for s in strips)
    assert plan_outline_path(WallSpec(width=3.0, height=2.45)) == []


def test_door_clips_crossed_strips_to_lintel_run():
    core = _core(plan_wall_strips(4.0, 2.7, [DOOR]))
    for index in (2, 3, 4, 5):
        assert core[index].runs == [(2.1, 2.45)]
    for index in (1, 6):
        assert core[index].runs == [(0.0, 2.45)]
    # jambs sit on strip edges, so nothing is left bare beside the door
    assert len(core) == 17


def test_partly_covered_strip_is_clipped_too():
    door = Opening(kind="door", u_min=1.2, u_max=2.1, z_min=0.0, z_max=2.1)
    core = _core(plan_wall_strips(4.0, 2.7, [door]))
    # strip 4 spans [0.96, 1.21] and strip 8 [1.92, 2.17]
    for index in range(4, 9):
        assert core[index].runs == [(2.1, 2.45)]
    assert core[3].runs == [(0.0, 2.45)]
    assert core[9].runs == [(0.0, 2.45)]


def test_bare_wall_beside_a_clipped_strip_gets_a_flush_strip():
    door = Opening(kind="door", u_min=1.2, u_max=2.1, z_min=0.0, z_max=2.1)
    infill = sorted((s for s in _core(plan_wall_strips(4.0, 2.7, [door])) if s.index >= 17), key=lambda s: s.u)
    # one strip against each jamb, painting only beside the door
    assert len(infill) == 2
    assert infill[0].u_max == pytest.approx(1.2)
    assert infill[1].u_min == pytest.approx(2.1)
    assert all(s.runs == [(0.0, 2.1)] for s in infill)


def test_window_band_clips_only_its_height():
    window = Opening(kind="window", u_min=1.0, u_max=2.2, z_min=0.9, z_max=2.1)
    core = _core(plan_wall_strips(3.5, 2.7, [window]))
    assert core[4].runs == [(0.0, 0.9), (2.1, 2.45)]
    assert core[9].runs == [(0.0, 0.9), (2.1, 2.45)]
    infill = sorted((s for s in core if s.index >= 15), key=lambda s: s.u)
    assert len(infill) == 2
    assert infill[0].u_max == pytest.approx(1.0)
    assert infill[1].u_min == pytest.approx(2.2)
    assert all(s.runs == [(0.9, 2.1)] for s in infill)


def test_outline_band_skips_a_tall_opening():
    door = Opening(kind="door", u_min=1.0, u_max=1.9, z_min=0.0, z_max=2.6)
    outline = next(s for s in plan_wall_strips(4.0, 2.7, [door]) if s.section == "outline")
    assert outline.runs == [(0.0, 1.0), (1.9, 4.0)]


def test_invalid_wall_sizes():
    with pytest.raises(WallTooNarrow):
        plan_wall_strips(0.2, 2.7)
    with pytest.raises(WallTooTall):
        plan_wall_strips(4.0, 2.8)


# -- posts ----------------------------------------------------------------------------

def test_seventeen_strips_make_five_posts():
    posts = plan_base_posts(plan_wall_strips(4.0, 2.7))
    assert [len(p.strip_indices) for p in posts] == [4, 4, 4, 4, 1]
    assigned = sorted(i for p in posts for i in p.strip_indices)
    assert assigned == list(range(17))
    assert all(abs(o) <= 0.5 for p in posts for o in p.offsets)


def test_four_strips_centre_on_post():
    posts = plan_base_posts(_core(plan_wall_strips(0.97, 2.45)))
    assert len(posts) == 1
    np.testing.assert_allclose(posts[0].offsets, [-0.36, -0.12, 0.12, 0.36], atol=1e-9)


def test_posts_clear_adjoining_walls():
    wall = WallSpec(width=4.0, height=2.7)
    posts = plan_base_posts(plan_wall_strips(4.0, 2.7), wall=wall)
    assert posts[-1].u == pytest.approx(3.5)
    assert posts[-1].offsets[0] == pytest.approx(0.375)


def test_post_pose_faces_along_wall_at_standoff():
    wall = WallSpec(width=4.0, height=2.7, start=(0.0, 4.0), direction=(0.0, -1.0))
    post = plan_base_posts(plan_wall_strips(4.0, 2.7), 0.175, wall)[0]
    x, y, yaw = post.pose
    assert x == pytest.approx(0.625)
    assert y == pytest.approx(4.0 - post.u)
    assert yaw == pytest.approx(-math.pi / 2)


@pytest.mark.parametrize("standoff", [0.05, 0.3])
def test_standoff_outside_window_rejected(standoff):
    with pytest.raises(TrajectoryError):
        plan_base_posts(plan_wall_strips(1.0, 2.45), standoff)


# -- tip paths ------------------------------------------------------------------------

def test_one_strip_is_a_ten_second_pass():
    strips = plan_wall_strips(0.25, 2.45)
    path = TipPath(plan_core_path(strips))
    assert path.spray_on_time == pytest.approx(10.0, abs=1e-9)
    legs = path.spray_legs()
    assert len(legs) == 1
    mean_speed = 2.45 / (legs[0][1] - legs[0][0])
    assert mean_speed == pytest.approx(0.245)


def test_four_strips_alternate_directions():
    strips = _core(plan_wall_strips(0.97, 2.45))
    post = plan_base_posts(strips)[0]
    waypoints = plan_core_path(strips, post)
    path = TipPath(waypoints)
    assert path.spray_on_time == pytest.approx(40.0, abs=1e-9)
    directions = []
    for start, end, _ in path.spray_legs():
        dz = path.sample(end - 1e-6).position[1] - path.sample(start).position[1]
        directions.append(np.sign(dz))
    assert directions == [1, -1, 1, -1]
    shifts = [b.t - a.t for a, b in zip(waypoints[:-1], waypoints[1:]) if not a.spray_on]
    assert all(0.3 <= s <= 0.4 for s in shifts)


def test_core_path_rejects_far_strips():
    strips = _core(plan_wall_strips(0.97, 2.45))
    far_post = BasePost(index=0, wall_id=0, u=-0.2, pose=(0.0, 0.0, 0.0),
                        strip_indices=[0, 1, 2, 3], offsets=[0.0] * 4)
    with pytest.raises(StripOutOfLateralRange):
        plan_core_path(strips, far_post)


def test_outline_path_is_rolled_and_reversed():
    wall = WallSpec(width=4.0, height=2.7)
    waypoints = plan_outline_path(wall)
    assert all(w.roll == pytest.approx(math.pi / 2) for w in waypoints)
    assert waypoints[0].u > waypoints[-1].u
    assert all(w.z == pytest.approx(2.575) for w in waypoints)


def test_door_strips_split_into_runs_with_transit():
    core = _core(plan_wall_strips(4.0, 2.7, [DOOR]))
    path = TipPath(plan_core_path(core[0:4]))
    # strips 0 and 1 are full passes; 2 and 3 only paint above the door
    assert path.spray_on_time == pytest.approx(20.0 + 2 * 0.35 / 0.245, abs=1e-9)


# -- coverage -------------------------------------------------------------------------

def test_single_pass_covers_its_strip_width():
    wall = WallSpec(width=2.0, height=2.45)
    path = TipPath([
        TipWaypoint(t=0.0, u=1.0, z=0.0, spray_on=True),
        TipWaypoint(t=10.0, u=1.0, z=2.45),
    ])
    coverage = spray_coverage(path, wall)
    columns = np.flatnonzero(coverage.thickness.any(axis=0))
    assert 26 <= columns.size <= 27
    assert coverage.thickness[:, columns].min() == 1


def test_spray_off_transit_paints_nothing():
    wall = WallSpec(width=2.0, height=2.45)
    path = TipPath([TipWaypoint(t=0.0, u=0.5, z=1.0), TipWaypoint(t=1.0, u=1.5, z=1.0)])
    assert spray_coverage(path, wall).covered_fraction == 0.0


def test_planned_wall_is_fully_covered():
    coverage = wall_plan_coverage(plan_wall(WallSpec(width=4.0, height=2.7)))
    assert coverage.covered_fraction >= 0.999
    assert coverage.paintable_area == pytest.approx(10.8)


def test_door_wall_coverage_excludes_opening():
    wall = WallSpec(width=4.0, height=2.7, openings=[DOOR])
    coverage = wall_plan_coverage(plan_wall(wall))
    assert coverage.paintable_area == pytest.approx(10.8 - 0.95 * 2.1)
    assert coverage.covered_fraction >= 0.995
    assert not coverage.paintable[100, 100]
    assert new_coverage_map(wall).covered_fraction == 0.0


def test_door_room_paints_nothing_through_its_openings(door_room):
    door_wall, window_wall = door_room.wall_spec(1), door_room.wall_spec(2)

    core = _core(plan_wall_strips(door_wall.width, door_wall.height, door_wall.openings, 1))
    assert core[4].runs == [(2.1, 2.45)]
    assert core[8].runs == [(2.1, 2.45)]

    door = wall_plan_coverage(plan_wall(door_wall))
    assert door.covered_fraction >= 0.995
    # only the pattern margin past the run ends and jamb strips lands in the doorway
    assert door.overspray_area < 0.08
    assert door.thickness[:205, 123:207].max() == 0

    window = wall_plan_coverage(plan_wall(window_wall))
    assert window.covered_fraction >= 0.995
    assert window.thickness[95:205, 105:215].max() == 0


# -- plans ----------------------------------------------------------------------------

def test_plan_is_deterministic():
    walls = [WallSpec(wall_id=i, width=4.0, height=2.7) for i in range(2)]
    assert plan_to_json(plan_paint(walls)) == plan_to_json(plan_paint(walls))


def test_plan_totals():
    plan = plan_paint([WallSpec(width=4.0, height=2.7, openings=[DOOR])])
    wall_plan = plan.walls[0]
    assert len(plan.posts) == 5
    assert plan.total_paint_area == pytest.approx(wall_plan.paint_area)
    full_passes = sum(1 for s in wall_plan.strips if s.runs == [(0.0, 2.45)])
    assert wall_plan.spray_on_time > 10.0 * full_passes


def test_plan_svg_written(tmp_path):
    plan = plan_paint([WallSpec(width=2.0, height=2.7, openings=[DOOR])])
    target = write_plan_svg(plan, str(tmp_path / "plan.svg"))
    with open(target, encoding="utf-8") as f:
        assert "<svg" in f.read()

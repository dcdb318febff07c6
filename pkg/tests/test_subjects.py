"""Tests for navstress.subjects: the built-in planners and their plumbing.

Covers the unobstructed and at-goal behaviour of both reference planners,
``plan_step`` error wrapping, parameter coercion, the subject factory and
the grid search used by the replanner.
"""

import math

import pytest

from navstress.errors import SubjectError, UnknownSubject, ValidationError
from navstress.geometry import Pose2D
from navstress.logfile import log_to_lines
from navstress.scenario import RobotConfig
from navstress.simulator import DEFAULT_DT, EventKind, SafetyLayerState, run_test
from navstress.subjects import (
    STOP,
    SensorSnapshot,
    Subject,
    SubjectSpec,
    VelocityCommand,
    goal_alignment,
    make_subject,
    parse_params,
    plan_step,
)
from navstress.subjects.external import ExternalSubject
from navstress.subjects.grid_planner import DistanceGrid, GridPlannerParams, GridReplanner, astar
from navstress.subjects.potential_field import PotentialFieldParams, PotentialFieldPlanner

from conftest import NORTH, box, cylinder

CONFIG = RobotConfig()


def _snapshot(x=0.0, y=0.0, yaw=NORTH, goal=(0.0, 10.0, NORTH), obstacles=(), t=0.0, final=True):
    return SensorSnapshot(Pose2D(x, y, yaw), Pose2D(*goal), tuple(obstacles), final, t)


class _Raising(Subject):
    kind = "raising"

    def plan(self, snapshot, config):
        raise ZeroDivisionError("boom")


class _Diverging(Subject):
    kind = "diverging"

    def plan(self, snapshot, config):
        return VelocityCommand(math.nan, 0.0, 0.0)


# ---------------------------------------------------------------------------
# reference planners
# ---------------------------------------------------------------------------
@pytest.mark.parametrize("kind", ["refnav_a", "refnav_b"])
class TestReferencePlanners:
    """Behaviour shared by both reference subjects."""

    def test_unobstructed_straight_ahead(self, kind):
        """Nothing in sight and the waypoint dead ahead: drive forward."""
        cmd = make_subject(kind).plan(_snapshot(), CONFIG)
        assert cmd.vx > 0
        assert cmd.vy == pytest.approx(0.0, abs=1e-9)
        assert cmd.wyaw == pytest.approx(0.0, abs=1e-9)

    def test_within_goal_tolerance_stops(self, kind):
        cmd = make_subject(kind).plan(_snapshot(0.1, 9.9), CONFIG)
        assert cmd == STOP

    def test_misaligned_at_goal_turns_in_place(self, kind):
        cmd = make_subject(kind).plan(_snapshot(0.0, 10.0, yaw=0.0), CONFIG)
        assert (cmd.vx, cmd.vy) == (0.0, 0.0)
        assert cmd.wyaw > 0

    def test_deterministic(self, kind):
        """Two fresh instances fed the same snapshots emit identical commands."""
        snaps = [
            _snapshot(0.05 * i, 0.3 * i, NORTH - 0.02 * i, obstacles=(box(1.2, 3.0), cylinder(-1.0, 4.0)), t=0.05 * i)
            for i in range(30)
        ]
        a, b = make_subject(kind), make_subject(kind)
        assert [a.plan(s, CONFIG) for s in snaps] == [b.plan(s, CONFIG) for s in snaps]


class TestPotentialField:
    """RefNav-A specifics."""

    def test_repelled_sideways(self):
        """An obstacle just left of the path pushes the command to the right."""
        cmd = PotentialFieldPlanner().plan(_snapshot(obstacles=(cylinder(-1.0, 1.0, 0.6),)), CONFIG)
        assert cmd.vy < 0

    def test_ignores_obstacles_beyond_influence(self):
        far = _snapshot(obstacles=(cylinder(4.0, 0.0),))
        assert PotentialFieldPlanner().plan(far, CONFIG) == PotentialFieldPlanner().plan(_snapshot(), CONFIG)

    def test_params_from_strings(self):
        p = PotentialFieldPlanner({"influence_radius": "0.8"})
        assert p.p == PotentialFieldParams(influence_radius=0.8)
        assert p.subject_id == "refnav_a(influence_radius=0.8)"


class TestNarrowGap:
    """RefNav-A in a 1.2 m gap between two 6 m walls, starting 0.1 m off centre."""

    WALLS = (box(-0.7, 4.0, 6.0, 0.2, NORTH), box(0.7, 4.0, 6.0, 0.2, NORTH))
    START = Pose2D(0.1, 3.0, NORTH)

    def _run(self, make_test, safety=None):
        t = make_test(self.WALLS, name="gap_1p2", start=self.START)
        return run_test(t, make_subject("refnav_a"), safety=safety)

    def test_lateral_commands_oscillate(self, make_test):
        """With a one-tick safety horizon the field flips the lateral command over and over."""
        log = self._run(make_test, SafetyLayerState(lookahead=DEFAULT_DT, margin=CONFIG.safety_margin))
        signs = [math.copysign(1.0, s.command.vy) for s in log.samples if s.command.vy != 0.0]
        flips = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
        assert flips >= 10

    def test_default_safety_layer_halts(self, make_test):
        """The first sideways lunge already projects into a wall."""
        log = self._run(make_test)
        assert log.terminal_event is EventKind.SAFETY_STOP

    def test_matches_recorded_log(self, make_test, golden):
        """The oscillating run is reproduced sample for sample."""
        log = self._run(make_test, SafetyLayerState(lookahead=DEFAULT_DT, margin=CONFIG.safety_margin))
        golden("refnav_a_gap_1p2.ndjson", "\n".join(log_to_lines(log)) + "\n")


class TestGridReplanner:
    """RefNav-B specifics."""

    def test_plans_around_blocking_box(self):
        r = GridReplanner()
        r.plan(_snapshot(obstacles=(box(0.0, 3.0, 2.0, 0.5),)), CONFIG)
        assert r.path is not None
        # the path leaves the straight line to get around the box
        assert max(abs(x) for x, _ in r.path) > 1.0

    def test_replans_on_period(self):
        r = GridReplanner()
        r.plan(_snapshot(t=0.0), CONFIG)
        first = r._planned_at
        r.plan(_snapshot(0.0, 0.2, t=0.5), CONFIG)
        assert r._planned_at == first
        r.plan(_snapshot(0.0, 0.5, t=1.0), CONFIG)
        assert r._planned_at == 1.0

    def test_no_path_stops(self):
        """A waypoint enclosed by a ring of cylinders is unreachable."""
        ring = [cylinder(2.0 * math.cos(a), 10.0 + 2.0 * math.sin(a), 1.4) for a in (i * math.pi / 6 for i in range(12))]
        r = GridReplanner()
        assert r.plan(_snapshot(obstacles=ring), CONFIG) == STOP
        assert r.path is None

    def test_reset_forgets_path(self):
        r = GridReplanner()
        r.plan(_snapshot(), CONFIG)
        r.reset(3)
        assert r.path is None


class TestAstar:
    def test_straight_line_on_free_grid(self):
        path = astar([False] * 25, 5, 5, (0, 2), (4, 2))
        assert path == [(0, 2), (1, 2), (2, 2), (3, 2), (4, 2)]

    def test_goal_blocked(self):
        blocked = [False] * 25
        blocked[2 * 5 + 4] = True
        assert astar(blocked, 5, 5, (0, 2), (4, 2)) is None

    def test_detours_through_gap(self):
        # wall at x = 2 with a single opening at y = 4
        blocked = [x == 2 and y != 4 for y in range(5) for x in range(5)]
        path = astar(blocked, 5, 5, (0, 0), (4, 0))
        assert (2, 4) in path

    def test_no_corner_cutting(self):
        # diagonal move (0,0)->(1,1) squeezes between two blocked cells
        blocked = [False] * 4
        blocked[1] = blocked[2] = True
        assert astar(blocked, 2, 2, (0, 0), (1, 1)) is None

    def test_distance_grid_blocks_inflated_cells(self):
        grid = DistanceGrid.build([cylinder(0.0, 0.0, 1.0)], (-1.0, -1.0, 1.0, 1.0), 0.5)
        occ = grid.blocked(0.0)
        assert occ[grid.cell_of(0.0, 0.0)[1] * grid.nx + grid.cell_of(0.0, 0.0)[0]]
        assert not occ[0]
        assert grid.blocked(1.0).count(True) > occ.count(True)


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------
class TestPlanStep:
    """``plan_step`` turns planner failures into SubjectError."""

    def test_passes_commands_through(self):
        cmd = plan_step(PotentialFieldPlanner(), _snapshot(), CONFIG)
        assert isinstance(cmd, VelocityCommand)

    def test_wraps_exceptions(self):
        with pytest.raises(SubjectError, match="ZeroDivisionError"):
            plan_step(_Raising(), _snapshot(), CONFIG)

    def test_rejects_non_finite(self):
        with pytest.raises(SubjectError, match="diverged"):
            plan_step(_Diverging(), _snapshot(), CONFIG)


class TestGoalAlignment:
    def test_none_while_travelling(self):
        assert goal_alignment(_snapshot(), CONFIG, 1.5) is None

    def test_none_for_intermediate_waypoint(self):
        assert goal_alignment(_snapshot(0.0, 10.0, final=False), CONFIG, 1.5) is None

    def test_rotation_clamped(self):
        cmd = goal_alignment(_snapshot(0.0, 10.0, yaw=-NORTH), CONFIG, 10.0)
        assert abs(cmd.wyaw) == CONFIG.max_yaw_rate


class TestVelocityCommand:
    def test_clamped_scales_linear_speed(self):
        cmd = VelocityCommand(3.0, 4.0, 5.0).clamped(0.5, 1.0)
        assert (cmd.vx, cmd.vy, cmd.wyaw) == pytest.approx((0.3, 0.4, 1.0))

    def test_clamped_leaves_slow_commands(self):
        cmd = VelocityCommand(0.1, -0.1, -0.2)
        assert cmd.clamped(0.5, 1.0) == cmd


class TestMakeSubject:
    """Verify the factory, specs and parameter parsing."""

    def test_kinds(self):
        assert isinstance(make_subject("refnav_a"), PotentialFieldPlanner)
        assert isinstance(make_subject("refnav_b"), GridReplanner)
        ext = make_subject("external", {"cmd": "planner --fast"})
        assert isinstance(ext, ExternalSubject)
        assert ext.argv == ["planner", "--fast"]

    def test_unknown_kind(self):
        with pytest.raises(UnknownSubject):
            make_subject("refnav_c")
        with pytest.raises(UnknownSubject):
            SubjectSpec.of("refnav_c")

    def test_external_requires_command(self):
        with pytest.raises(ValidationError):
            make_subject("external")

    def test_spec_round_trip(self):
        spec = SubjectSpec.of("refnav_b", {"lookahead": "0.8", "resolution": "0.05"})
        subject = spec.build()
        assert subject.p == GridPlannerParams(resolution=0.05, lookahead=0.8)
        assert spec.subject_id == subject.subject_id == "refnav_b(lookahead=0.8,resolution=0.05)"

    def test_unknown_param(self):
        with pytest.raises(ValidationError, match="unknown parameter"):
            parse_params(PotentialFieldParams, {"gain": 1})

    def test_uncoercible_param(self):
        with pytest.raises(ValidationError):
            parse_params(PotentialFieldParams, {"influence_radius": "wide"})

"""Fixed-step kinematic simulation of one test against one subject.

Every tick the simulator, in this order:

1. records the robot's clearance to the nearest obstacle,
2. ends the run on contact (``Collision``), on reaching the goal within both
   tolerances (``GoalReached``) or once ``t >= time_budget`` (``Timeout``),
   consuming intermediate waypoints within position tolerance on the way,
3. asks the subject for a command, clamps it to the robot's limits,
4. lets the safety layer veto it (``SafetyStop``, terminal),
5. integrates the command for ``dt`` with explicit Euler in the body frame.
   The last step before the budget is shortened so the final tick lands
   exactly on ``time_budget``.

The result is a :class:`TrajectoryLog`, a pure function of the test and the
subject's kind and parameters.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from .errors import SubjectError
from .geometry import ObstacleShape, OrientedBox, Pose2D, point_shape_distance, shape_distance
from .scenario import TestDefinition
from .subjects import STOP, SensorSnapshot, Subject, VelocityCommand, plan_step

log = logging.getLogger(__name__)

DEFAULT_DT = 0.05
DEFAULT_LOOKAHEAD = 1.0


class EventKind(str, enum.Enum):
    SAFETY_STOP = "SafetyStop"
    COLLISION = "Collision"
    WAYPOINT_REACHED = "WaypointReached"
    GOAL_REACHED = "GoalReached"
    TIMEOUT = "Timeout"
    SUBJECT_ERROR = "SubjectError"

    @property
    def terminal(self) -> bool:
        return self is not EventKind.WAYPOINT_REACHED


@dataclass(frozen=True)
class Sample:
    """Robot state at ``t`` and the command issued at that tick."""
    t: float
    pose: Pose2D
    command: VelocityCommand
    min_obstacle_distance: float


@dataclass(frozen=True)
class Event:
    t: float
    kind: EventKind
    detail: str = ""


@dataclass
class TrajectoryLog:
    """Execution record of one run; the evidence behind every oracle and metric."""
    test_name: str
    subject_id: str
    dt: float
    samples: List[Sample] = field(default_factory=list)
    events: List[Event] = field(default_factory=list)

    @property
    def terminal_event(self) -> Optional[EventKind]:
        if self.events and self.events[-1].kind.terminal:
            return self.events[-1].kind
        return None

    @property
    def final_pose(self) -> Optional[Pose2D]:
        return self.samples[-1].pose if self.samples else None

    def event_kinds(self) -> List[EventKind]:
        return [e.kind for e in self.events]


@dataclass(frozen=True)
class SafetyLayerState:
    """Constant-command collision predictor settings."""
    lookahead: float = DEFAULT_LOOKAHEAD
    margin: float = 0.05

    def __post_init__(self) -> None:
        if not self.lookahead > 0:
            raise ValueError(f"safety lookahead must be positive, got {self.lookahead}")
        if not self.margin >= 0:
            raise ValueError(f"safety margin must be non-negative, got {self.margin}")


class SafetyDecision(str, enum.Enum):
    PROCEED = "Proceed"
    HALT = "Halt"


def integrate(pose: Pose2D, cmd: VelocityCommand, dt: float) -> Pose2D:
    """One explicit Euler step of body-frame velocities."""
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    return Pose2D(
        pose.x + (cmd.vx * c - cmd.vy * s) * dt,
        pose.y + (cmd.vx * s + cmd.vy * c) * dt,
        pose.yaw + cmd.wyaw * dt,
    )


def safety_check(
    pose: Pose2D,
    cmd: VelocityCommand,
    obstacles: Sequence[ObstacleShape],
    state: SafetyLayerState,
    footprint: OrientedBox,
    dt: float = DEFAULT_DT,
) -> SafetyDecision:
    """Halt iff the footprint, propagated along *cmd* for ``state.lookahead``
    seconds and sampled every *dt*, comes within ``state.margin`` of an obstacle.

    Only the footprint's dimensions are taken from *footprint*; it is placed
    at *pose*.
    """
    if cmd.is_zero() or not obstacles:
        return SafetyDecision.PROCEED
    steps = max(1, int(round(state.lookahead / dt)))
    horizon = steps * dt
    radius = 0.5 * math.hypot(footprint.length, footprint.width)
    # Upper bound on how far any footprint point can travel within the horizon.
    reach = math.hypot(cmd.vx, cmd.vy) * horizon + radius * abs(cmd.wyaw) * horizon

    start = OrientedBox(pose, footprint.length, footprint.width)
    near = [o for o in obstacles if shape_distance(start, o) - reach <= state.margin]
    if not near:
        return SafetyDecision.PROCEED
    p = pose
    for _ in range(steps):
        p = integrate(p, cmd, dt)
        fp = OrientedBox(p, footprint.length, footprint.width)
        for o in near:
            if shape_distance(fp, o) <= state.margin:
                return SafetyDecision.HALT
    return SafetyDecision.PROCEED


def visible_obstacles(test: TestDefinition, pose: Pose2D) -> tuple:
    """Obstacle shapes within sensing range of the robot centre, in definition order."""
    r = test.robot.sensing_radius
    return tuple(o.shape for o in test.obstacles if point_shape_distance(o.shape, pose.x, pose.y) <= r)


def _finish(out: TrajectoryLog, sample: Sample, kind: EventKind, detail: str = "") -> TrajectoryLog:
    out.samples.append(sample)
    out.events.append(Event(sample.t, kind, detail))
    return out


def run_test(
    test: TestDefinition,
    subject: Subject,
    *,
    dt: float = DEFAULT_DT,
    safety: Optional[SafetyLayerState] = None,
) -> TrajectoryLog:
    """Simulate *test* against *subject* until a terminal event.

    Never raises for valid inputs: subject failures end the run with a
    ``SubjectError`` event.
    """
    robot = test.robot
    mission = test.mission
    safety = safety or SafetyLayerState(DEFAULT_LOOKAHEAD, robot.safety_margin)
    shapes = test.shapes()
    last = len(mission.waypoints) - 1
    out = TrajectoryLog(test.name, subject.subject_id, dt)

    subject.reset(test.rng_seed)
    pose = mission.start
    wp_index = 0
    step = 0
    t = 0.0
    while True:
        d = test.clearance(pose)

        if d == 0.0:
            return _finish(out, Sample(t, pose, STOP, d), EventKind.COLLISION)

        while wp_index < last and pose.distance_to(mission.waypoints[wp_index]) <= robot.goal_position_tolerance:
            out.events.append(Event(t, EventKind.WAYPOINT_REACHED, str(wp_index)))
            wp_index += 1
        goal = mission.waypoints[wp_index]
        if wp_index == last and pose.distance_to(goal) <= robot.goal_position_tolerance:
            if abs(math.remainder(goal.yaw - pose.yaw, 2.0 * math.pi)) <= robot.goal_yaw_tolerance:
                return _finish(out, Sample(t, pose, STOP, d), EventKind.GOAL_REACHED)

        if t >= mission.time_budget:
            return _finish(out, Sample(t, pose, STOP, d), EventKind.TIMEOUT)

        snapshot = SensorSnapshot(
            robot_pose=pose,
            current_waypoint=goal,
            visible_obstacles=visible_obstacles(test, pose),
            final_waypoint=wp_index == last,
            t=t,
        )
        try:
            cmd = plan_step(subject, snapshot, robot)
        except SubjectError as e:
            log.debug("%s: subject error at t=%s: %s", test.name, t, e)
            return _finish(out, Sample(t, pose, STOP, d), EventKind.SUBJECT_ERROR, str(e))
        cmd = cmd.clamped(robot.nominal_speed, robot.max_yaw_rate)

        if safety_check(pose, cmd, shapes, safety, robot.footprint(pose), dt) is SafetyDecision.HALT:
            return _finish(out, Sample(t, pose, cmd, d), EventKind.SAFETY_STOP)

        out.samples.append(Sample(t, pose, cmd, d))
        step += 1
        next_t, step_dt = round(step * dt, 9), dt
        if t < mission.time_budget < next_t:
            next_t, step_dt = mission.time_budget, mission.time_budget - t
        pose = integrate(pose, cmd, step_dt)
        t = next_t

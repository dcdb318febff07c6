"""Navigation subjects: the black-box planners under test.

Every subject implements :class:`Subject`. The simulator drives it one tick
at a time through :func:`plan_step`, which turns planner crashes and
non-finite output into :class:`~navstress.errors.SubjectError`.

Built-in kinds:

* ``refnav_a``: attractive/repulsive potential field (the weaker subject).
* ``refnav_b``: occupancy-grid replanner with a pure-pursuit tracker.
* ``external``: any executable speaking the line-delimited JSON protocol.
"""

from __future__ import annotations

import abc
import dataclasses
import math
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional, Tuple

from ..errors import SubjectError, UnknownSubject, ValidationError
from ..geometry import ObstacleShape, Pose2D

SUBJECT_KINDS = ("refnav_a", "refnav_b", "external")


@dataclass(frozen=True)
class VelocityCommand:
    """Body-frame velocity: ``vx`` forward, ``vy`` left (m/s), ``wyaw`` (rad/s)."""
    vx: float = 0.0
    vy: float = 0.0
    wyaw: float = 0.0

    def is_zero(self) -> bool:
        return self.vx == 0.0 and self.vy == 0.0 and self.wyaw == 0.0

    def clamped(self, nominal_speed: float, max_yaw_rate: float) -> "VelocityCommand":
        """Scale linear speed down to *nominal_speed* and clip the yaw rate."""
        vx, vy = self.vx, self.vy
        speed = math.hypot(vx, vy)
        if speed > nominal_speed:
            scale = nominal_speed / speed
            vx, vy = vx * scale, vy * scale
        wyaw = min(max(self.wyaw, -max_yaw_rate), max_yaw_rate)
        return VelocityCommand(vx, vy, wyaw)


STOP = VelocityCommand()


@dataclass(frozen=True)
class SensorSnapshot:
    """What a subject perceives at one tick.

    Attributes:
        robot_pose: Current robot pose.
        current_waypoint: Waypoint the robot is heading for.
        visible_obstacles: Obstacles whose shape lies within sensing range
            of the robot centre.
        final_waypoint: ``True`` when ``current_waypoint`` is the goal.
        t: Simulation time in seconds.
    """
    robot_pose: Pose2D
    current_waypoint: Pose2D
    visible_obstacles: Tuple[ObstacleShape, ...] = ()
    final_waypoint: bool = True
    t: float = 0.0


class Subject(abc.ABC):
    """Stateful planner; one instance drives one test at a time."""

    kind: str = ""

    def __init__(self, params: Optional[Mapping[str, Any]] = None) -> None:
        self.params: Dict[str, Any] = dict(params or {})

    @property
    def subject_id(self) -> str:
        if not self.params:
            return self.kind
        inner = ",".join(f"{k}={self.params[k]}" for k in sorted(self.params))
        return f"{self.kind}({inner})"

    def reset(self, seed: int = 0) -> None:
        """Forget everything learned during the previous test."""

    @abc.abstractmethod
    def plan(self, snapshot: SensorSnapshot, config) -> VelocityCommand:
        """Return the command for this tick."""

    def close(self) -> None:
        """Release external resources (processes, files)."""


def plan_step(subject: Subject, snapshot: SensorSnapshot, config) -> VelocityCommand:
    """Ask *subject* for one command.

    Raises:
        SubjectError: The planner raised or returned a non-finite command.
    """
    try:
        cmd = subject.plan(snapshot, config)
    except SubjectError:
        raise
    except Exception as e:
        raise SubjectError(f"{subject.subject_id} raised {type(e).__name__}: {e}") from e
    if not isinstance(cmd, VelocityCommand):
        raise SubjectError(f"{subject.subject_id} returned {type(cmd).__name__}, not a VelocityCommand")
    if not all(math.isfinite(v) for v in (cmd.vx, cmd.vy, cmd.wyaw)):
        raise SubjectError(f"{subject.subject_id} diverged: {cmd}")
    return cmd


def goal_alignment(snapshot: SensorSnapshot, config, yaw_gain: float) -> Optional[VelocityCommand]:
    """Command for a robot already inside the final goal's position tolerance.

    Returns ``None`` while the robot still has to travel; a zero command once
    both tolerances hold; otherwise an in-place rotation toward the goal yaw.
    """
    pose, wp = snapshot.robot_pose, snapshot.current_waypoint
    if not snapshot.final_waypoint or pose.distance_to(wp) > config.goal_position_tolerance:
        return None
    err = math.remainder(wp.yaw - pose.yaw, 2.0 * math.pi)
    if abs(err) <= config.goal_yaw_tolerance:
        return STOP
    return VelocityCommand(0.0, 0.0, max(-config.max_yaw_rate, min(config.max_yaw_rate, yaw_gain * err)))


def parse_params(params_cls, params: Mapping[str, Any]):
    """Build a frozen parameter dataclass, coercing strings from the CLI."""
    known = {f.name: f for f in dataclasses.fields(params_cls)}
    values = {}
    for key, raw in params.items():
        if key not in known:
            raise ValidationError(f"unknown parameter {key!r}; expected one of {', '.join(sorted(known))}")
        default = known[key].default
        try:
            values[key] = type(default)(raw) if not isinstance(default, str) else str(raw)
        except (TypeError, ValueError) as e:
            raise ValidationError(f"parameter {key!r}: {e}") from e
    return params_cls(**values)


@dataclass(frozen=True)
class SubjectSpec:
    """Picklable recipe for a subject, so worker processes can build their own."""
    kind: str
    params: Tuple[Tuple[str, Any], ...] = ()

    @classmethod
    def of(cls, kind: str, params: Optional[Mapping[str, Any]] = None) -> "SubjectSpec":
        if kind not in SUBJECT_KINDS:
            raise UnknownSubject(f"unknown subject kind {kind!r}; expected one of {', '.join(SUBJECT_KINDS)}")
        return cls(kind, tuple(sorted((params or {}).items())))

    def build(self) -> Subject:
        return make_subject(self.kind, dict(self.params))

    @property
    def subject_id(self) -> str:
        if not self.params:
            return self.kind
        return f"{self.kind}({','.join(f'{k}={v}' for k, v in self.params)})"


def make_subject(kind: str, params: Optional[Mapping[str, Any]] = None) -> Subject:
    """Fresh planner of *kind* with documented default parameters.

    Raises:
        UnknownSubject: *kind* is not one of :data:`SUBJECT_KINDS`.
    """
    params = dict(params or {})
    if kind == "refnav_a":
        from .potential_field import PotentialFieldPlanner
        return PotentialFieldPlanner(params)
    if kind == "refnav_b":
        from .grid_planner import GridReplanner
        return GridReplanner(params)
    if kind == "external":
        from .external import ExternalSubject
        return ExternalSubject(params)
    raise UnknownSubject(f"unknown subject kind {kind!r}; expected one of {', '.join(SUBJECT_KINDS)}")

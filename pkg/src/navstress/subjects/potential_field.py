"""RefNav-A: memoryless attractive/repulsive potential field.

The robot is pulled toward the current waypoint with constant strength and
pushed away from every visible obstacle whose clearance is below the
influence radius. The resulting force is followed holonomically at nominal
speed while the body turns toward it.

No memory and no replanning: the field has local minima (the robot stops
in front of a blocking obstacle and times out) and oscillates laterally in
gaps narrower than about 1.5 m, which is where the safety layer steps in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..geometry import closest_point
from . import STOP, SensorSnapshot, Subject, VelocityCommand, goal_alignment, parse_params

_MIN_CLEARANCE = 0.05
_FORCE_EPS = 1e-9


@dataclass(frozen=True)
class PotentialFieldParams:
    influence_radius: float = 1.5
    attraction_gain: float = 1.0
    repulsion_gain: float = 0.5
    heading_gain: float = 1.5


class PotentialFieldPlanner(Subject):
    """Weak reference subject (``refnav_a``)."""

    kind = "refnav_a"

    def __init__(self, params=None) -> None:
        super().__init__(params)
        self.p = parse_params(PotentialFieldParams, self.params)

    def plan(self, snapshot: SensorSnapshot, config) -> VelocityCommand:
        aligned = goal_alignment(snapshot, config, self.p.heading_gain)
        if aligned is not None:
            return aligned

        pose, wp = snapshot.robot_pose, snapshot.current_waypoint
        dx, dy = wp.x - pose.x, wp.y - pose.y
        d = math.hypot(dx, dy)
        fx, fy = (self.p.attraction_gain * dx / d, self.p.attraction_gain * dy / d) if d > 0 else (0.0, 0.0)

        # The footprint's half width stands in for the robot radius.
        body_radius = config.footprint_width / 2.0
        rho0 = self.p.influence_radius
        for shape in snapshot.visible_obstacles:
            qx, qy = closest_point(shape, pose.x, pose.y)
            rx, ry = pose.x - qx, pose.y - qy
            rc = math.hypot(rx, ry)
            if rc == 0.0:
                continue
            rho = max(rc - body_radius, _MIN_CLEARANCE)
            if rho >= rho0:
                continue
            mag = self.p.repulsion_gain * (1.0 / rho - 1.0 / rho0) / (rho * rho)
            fx += mag * rx / rc
            fy += mag * ry / rc

        norm = math.hypot(fx, fy)
        if norm < _FORCE_EPS:
            return STOP

        c, s = math.cos(pose.yaw), math.sin(pose.yaw)
        bx = (c * fx + s * fy) / norm
        by = (-s * fx + c * fy) / norm
        heading = math.atan2(by, bx)
        speed = config.nominal_speed
        wyaw = max(-config.max_yaw_rate, min(config.max_yaw_rate, self.p.heading_gain * heading))
        return VelocityCommand(speed * bx, speed * by, wyaw)

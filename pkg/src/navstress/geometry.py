"""Planar shapes and exact distance computations.

The robot footprint and box obstacles are oriented boxes; cylinders are
circles. Every distance here is the Euclidean distance between the two
*closed* regions, clamped to exactly ``0.0`` when they touch or overlap.
Penetration depth is never reported.

Box/box distance uses a separating-axis overlap pre-test followed by
vertex/edge enumeration, which is exact for convex polygons and needs no
iterative solver. All angles are radians; degrees exist only at the file
boundary (see ``scenario``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Tuple, Union

import numpy as np

Point = Tuple[float, float]


def normalize_angle(a: float) -> float:
    """Wrap *a* into ``(-pi, pi]``."""
    r = math.remainder(a, 2.0 * math.pi)
    if r <= -math.pi:
        r += 2.0 * math.pi
    return r


@dataclass(frozen=True)
class Pose2D:
    """Position in meters and heading in radians, yaw kept in ``(-pi, pi]``."""
    x: float
    y: float
    yaw: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.yaw)):
            raise ValueError(f"pose must be finite, got ({self.x}, {self.y}, {self.yaw})")
        object.__setattr__(self, "yaw", normalize_angle(self.yaw))

    def distance_to(self, other: "Pose2D") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)


@dataclass(frozen=True)
class OrientedBox:
    """Rectangle of ``length`` along the heading and ``width`` across it."""
    center: Pose2D
    length: float
    width: float

    def __post_init__(self) -> None:
        if not (self.length > 0 and self.width > 0):
            raise ValueError(f"box dimensions must be positive, got {self.length} x {self.width}")

    def axes(self) -> Tuple[Point, Point]:
        c, s = math.cos(self.center.yaw), math.sin(self.center.yaw)
        return (c, s), (-s, c)

    def corners(self) -> List[Point]:
        """Corners in counter-clockwise order, starting front-left."""
        (ux, uy), (vx, vy) = self.axes()
        hl, hw = self.length / 2.0, self.width / 2.0
        cx, cy = self.center.x, self.center.y
        out = []
        for sl, sw in ((1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)):
            out.append((cx + sl * hl * ux + sw * hw * vx, cy + sl * hl * uy + sw * hw * vy))
        return out


@dataclass(frozen=True)
class CircleShape:
    """Disc footprint of a cylinder."""
    x: float
    y: float
    diameter: float

    def __post_init__(self) -> None:
        if not self.diameter > 0:
            raise ValueError(f"circle diameter must be positive, got {self.diameter}")

    @property
    def radius(self) -> float:
        return self.diameter / 2.0

    @property
    def center(self) -> Point:
        return (self.x, self.y)


ObstacleShape = Union[OrientedBox, CircleShape]


def footprint_at(pose: Pose2D, length: float, width: float) -> OrientedBox:
    """Robot footprint box centred on *pose*."""
    return OrientedBox(center=pose, length=length, width=width)


# --- primitives ---------------------------------------------------------------

def _point_segment_distance(px: float, py: float, ax: float, ay: float, bx: float, by: float) -> float:
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / seg2
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _project(corners: List[Point], ax: float, ay: float) -> Tuple[float, float]:
    vals = [x * ax + y * ay for x, y in corners]
    return min(vals), max(vals)


def _boxes_separated(a: OrientedBox, b: OrientedBox, ca: List[Point], cb: List[Point]) -> bool:
    # Closed regions: touching projections do not separate.
    for ax, ay in (*a.axes(), *b.axes()):
        amin, amax = _project(ca, ax, ay)
        bmin, bmax = _project(cb, ax, ay)
        if amax < bmin or bmax < amin:
            return True
    return False


def _to_box_frame(box: OrientedBox, x: float, y: float) -> Point:
    (ux, uy), (vx, vy) = box.axes()
    dx, dy = x - box.center.x, y - box.center.y
    return dx * ux + dy * uy, dx * vx + dy * vy


def point_box_distance(box: OrientedBox, x: float, y: float) -> float:
    lx, ly = _to_box_frame(box, x, y)
    ex = max(abs(lx) - box.length / 2.0, 0.0)
    ey = max(abs(ly) - box.width / 2.0, 0.0)
    return math.hypot(ex, ey)


# --- public distances ---------------------------------------------------------

def box_box_distance(a: OrientedBox, b: OrientedBox) -> float:
    """Minimum distance between two closed boxes, ``0.0`` on contact."""
    ca, cb = a.corners(), b.corners()
    if not _boxes_separated(a, b, ca, cb):
        return 0.0
    best = math.inf
    for pts, poly in ((ca, cb), (cb, ca)):
        for px, py in pts:
            for i in range(4):
                qx, qy = poly[i]
                rx, ry = poly[(i + 1) % 4]
                d = _point_segment_distance(px, py, qx, qy, rx, ry)
                if d < best:
                    best = d
    return best


def box_circle_distance(a: OrientedBox, c: CircleShape) -> float:
    """Distance from box region to disc region, ``0.0`` on overlap."""
    return max(0.0, point_box_distance(a, c.x, c.y) - c.radius)


def circle_circle_distance(a: CircleShape, b: CircleShape) -> float:
    return max(0.0, math.hypot(a.x - b.x, a.y - b.y) - (a.radius + b.radius))


def shape_distance(a: ObstacleShape, b: ObstacleShape) -> float:
    """Dispatch over the shape union; symmetric in its arguments."""
    if isinstance(a, OrientedBox):
        if isinstance(b, OrientedBox):
            return box_box_distance(a, b)
        return box_circle_distance(a, b)
    if isinstance(b, OrientedBox):
        return box_circle_distance(b, a)
    return circle_circle_distance(a, b)


def obstacle_gap(a: ObstacleShape, b: ObstacleShape) -> float:
    """Obstacle-to-obstacle gap, reported per test and used for difficulty analysis."""
    return shape_distance(a, b)


def min_pairwise_gap(shapes: List[ObstacleShape]) -> float:
    """Smallest gap over all obstacle pairs; ``inf`` with fewer than two."""
    best = math.inf
    for i in range(len(shapes)):
        for j in range(i + 1, len(shapes)):
            best = min(best, obstacle_gap(shapes[i], shapes[j]))
    return best


def point_shape_distance(shape: ObstacleShape, x: float, y: float) -> float:
    if isinstance(shape, OrientedBox):
        return point_box_distance(shape, x, y)
    return max(0.0, math.hypot(x - shape.x, y - shape.y) - shape.radius)


def closest_point(shape: ObstacleShape, x: float, y: float) -> Point:
    """Point of *shape* closest to ``(x, y)`` (the point itself when inside)."""
    if isinstance(shape, OrientedBox):
        lx, ly = _to_box_frame(shape, x, y)
        hl, hw = shape.length / 2.0, shape.width / 2.0
        lx = min(max(lx, -hl), hl)
        ly = min(max(ly, -hw), hw)
        (ux, uy), (vx, vy) = shape.axes()
        return shape.center.x + lx * ux + ly * vx, shape.center.y + lx * uy + ly * vy
    dx, dy = x - shape.x, y - shape.y
    d = math.hypot(dx, dy)
    if d <= shape.radius:
        return x, y
    return shape.x + dx * shape.radius / d, shape.y + dy * shape.radius / d


def contains_point(shape: ObstacleShape, x: float, y: float) -> bool:
    return point_shape_distance(shape, x, y) == 0.0


def points_shape_distance(shape: ObstacleShape, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorised :func:`point_shape_distance` over coordinate arrays."""
    if isinstance(shape, OrientedBox):
        (ux, uy), (vx, vy) = shape.axes()
        dx, dy = xs - shape.center.x, ys - shape.center.y
        ex = np.maximum(np.abs(dx * ux + dy * uy) - shape.length / 2.0, 0.0)
        ey = np.maximum(np.abs(dx * vx + dy * vy) - shape.width / 2.0, 0.0)
        return np.hypot(ex, ey)
    return np.maximum(np.hypot(xs - shape.x, ys - shape.y) - shape.radius, 0.0)


def bounding_extent(shape: ObstacleShape) -> Tuple[float, float, float, float]:
    """Axis-aligned ``(xmin, ymin, xmax, ymax)`` of *shape*."""
    if isinstance(shape, OrientedBox):
        cs = shape.corners()
        xs = [p[0] for p in cs]
        ys = [p[1] for p in cs]
        return min(xs), min(ys), max(xs), max(ys)
    r = shape.radius
    return shape.x - r, shape.y - r, shape.x + r, shape.y + r


def transform_pose(pose: Pose2D, dx: float, dy: float, dtheta: float) -> Pose2D:
    """Rotate *pose* about the origin by *dtheta*, then translate."""
    c, s = math.cos(dtheta), math.sin(dtheta)
    return Pose2D(c * pose.x - s * pose.y + dx, s * pose.x + c * pose.y + dy, pose.yaw + dtheta)


def transform_shape(shape: ObstacleShape, dx: float, dy: float, dtheta: float) -> ObstacleShape:
    """Apply the same rigid transform as :func:`transform_pose` to *shape*."""
    if isinstance(shape, OrientedBox):
        return replace(shape, center=transform_pose(shape.center, dx, dy, dtheta))
    p = transform_pose(Pose2D(shape.x, shape.y), dx, dy, dtheta)
    return replace(shape, x=p.x, y=p.y)


def point_polyline_distance(x: float, y: float, polyline: List[Point]) -> float:
    """Distance from ``(x, y)`` to the nearest segment of *polyline*."""
    if len(polyline) == 1:
        return math.hypot(x - polyline[0][0], y - polyline[0][1])
    return min(
        _point_segment_distance(x, y, a[0], a[1], b[0], b[1]) for a, b in zip(polyline, polyline[1:])
    )

"""RefNav-B: occupancy-grid shortest-path replanner with pure pursuit.

Every ``replan_period`` seconds of simulation time (and whenever the current
waypoint changes) the visible obstacles are rasterised on a 0.1 m grid over
the region spanned by robot, waypoint and obstacles. Obstacles are inflated
by half the footprint diagonal plus the safety margin; when that leaves no
path, planning is retried with half the footprint width plus the margin.
The 8-connected A* path is then tracked with a 0.6 m pure-pursuit lookahead.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..geometry import ObstacleShape, bounding_extent, points_shape_distance
from . import STOP, SensorSnapshot, Subject, VelocityCommand, goal_alignment, parse_params

Cell = Tuple[int, int]
Point = Tuple[float, float]

_SQRT2 = math.sqrt(2.0)
_MOVES = (
    (1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
    (1, 1, _SQRT2), (1, -1, _SQRT2), (-1, 1, _SQRT2), (-1, -1, _SQRT2),
)


@dataclass(frozen=True)
class GridPlannerParams:
    resolution: float = 0.1
    replan_period: float = 1.0
    lookahead: float = 0.6
    padding: float = 2.0
    heading_gain: float = 1.5


class DistanceGrid:
    """Cell-centre distances to the nearest obstacle over a rectangular region."""

    def __init__(self, x0: float, y0: float, nx: int, ny: int, res: float, dist: np.ndarray) -> None:
        self.x0, self.y0, self.nx, self.ny, self.res = x0, y0, nx, ny, res
        self.dist = dist

    @classmethod
    def build(cls, shapes: Sequence[ObstacleShape], bounds: Tuple[float, float, float, float], res: float) -> "DistanceGrid":
        xmin, ymin, xmax, ymax = bounds
        nx = int(math.ceil((xmax - xmin) / res)) + 1
        ny = int(math.ceil((ymax - ymin) / res)) + 1
        xs = xmin + res * np.arange(nx)
        ys = ymin + res * np.arange(ny)
        gx, gy = np.meshgrid(xs, ys)
        dist = np.full((ny, nx), np.inf)
        for shape in shapes:
            dist = np.minimum(dist, points_shape_distance(shape, gx, gy))
        return cls(xmin, ymin, nx, ny, res, dist)

    def cell_of(self, x: float, y: float) -> Cell:
        ix = min(max(int(round((x - self.x0) / self.res)), 0), self.nx - 1)
        iy = min(max(int(round((y - self.y0) / self.res)), 0), self.ny - 1)
        return ix, iy

    def center(self, cell: Cell) -> Point:
        return self.x0 + cell[0] * self.res, self.y0 + cell[1] * self.res

    def blocked(self, inflation: float) -> List[bool]:
        """Row-major flat occupancy for *inflation*."""
        return (self.dist <= inflation).ravel().tolist()


def astar(blocked: List[bool], nx: int, ny: int, start: Cell, goal: Cell) -> Optional[List[Cell]]:
    """8-connected A* without corner cutting; the start cell is always enterable."""
    s = start[1] * nx + start[0]
    g = goal[1] * nx + goal[0]
    if blocked[g]:
        return None
    gx, gy = goal

    def h(ix: int, iy: int) -> float:
        dx, dy = abs(ix - gx), abs(iy - gy)
        return dx + dy + (_SQRT2 - 2.0) * min(dx, dy)

    counter = itertools.count()
    best = {s: 0.0}
    came = {}
    heap = [(h(*start), 0.0, next(counter), s)]
    while heap:
        _, neg_cost, _, node = heapq.heappop(heap)
        cost = -neg_cost
        if node == g:
            path = [node]
            while node in came:
                node = came[node]
                path.append(node)
            path.reverse()
            return [(n % nx, n // nx) for n in path]
        if cost > best.get(node, math.inf):
            continue
        ix, iy = node % nx, node // nx
        for dx, dy, step in _MOVES:
            jx, jy = ix + dx, iy + dy
            if not (0 <= jx < nx and 0 <= jy < ny):
                continue
            nb = jy * nx + jx
            if blocked[nb]:
                continue
            if dx and dy and (blocked[iy * nx + jx] or blocked[jy * nx + ix]):
                continue
            new = cost + step
            if new < best.get(nb, math.inf):
                best[nb] = new
                came[nb] = node
                # Deeper nodes first among equal f keeps straight paths cheap.
                heapq.heappush(heap, (new + h(jx, jy), -new, next(counter), nb))
    return None


class GridReplanner(Subject):
    """Strong reference subject (``refnav_b``)."""

    kind = "refnav_b"

    def __init__(self, params=None) -> None:
        super().__init__(params)
        self.p = parse_params(GridPlannerParams, self.params)
        self.reset()

    def reset(self, seed: int = 0) -> None:
        self.path: Optional[List[Point]] = None
        self._planned_at: Optional[float] = None
        self._planned_for: Optional[Tuple[float, float]] = None
        self._progress = 0

    def _needs_plan(self, snapshot: SensorSnapshot) -> bool:
        wp = (snapshot.current_waypoint.x, snapshot.current_waypoint.y)
        if self._planned_at is None or wp != self._planned_for:
            return True
        return snapshot.t - self._planned_at >= self.p.replan_period - 1e-9

    def _replan(self, snapshot: SensorSnapshot, config) -> None:
        pose, wp = snapshot.robot_pose, snapshot.current_waypoint
        xs = [pose.x, wp.x]
        ys = [pose.y, wp.y]
        for shape in snapshot.visible_obstacles:
            x0, y0, x1, y1 = bounding_extent(shape)
            xs += [x0, x1]
            ys += [y0, y1]
        pad = self.p.padding
        grid = DistanceGrid.build(
            snapshot.visible_obstacles,
            (min(xs) - pad, min(ys) - pad, max(xs) + pad, max(ys) + pad),
            self.p.resolution,
        )
        margin = config.safety_margin
        inflations = (
            0.5 * math.hypot(config.footprint_length, config.footprint_width) + margin,
            0.5 * config.footprint_width + margin,
        )
        start, goal = grid.cell_of(pose.x, pose.y), grid.cell_of(wp.x, wp.y)
        self.path = None
        for inflation in inflations:
            cells = astar(grid.blocked(inflation), grid.nx, grid.ny, start, goal)
            if cells:
                pts = [grid.center(c) for c in cells]
                pts[0] = (pose.x, pose.y)
                pts[-1] = (wp.x, wp.y)
                self.path = pts
                break
        self._planned_at = snapshot.t
        self._planned_for = (wp.x, wp.y)
        self._progress = 0

    def _lookahead_point(self, x: float, y: float) -> Point:
        path = self.path
        i = min(range(self._progress, len(path)), key=lambda k: (path[k][0] - x) ** 2 + (path[k][1] - y) ** 2)
        self._progress = i
        remaining = self.p.lookahead
        px, py = path[i]
        for qx, qy in path[i + 1:]:
            seg = math.hypot(qx - px, qy - py)
            if seg >= remaining:
                f = remaining / seg
                return px + f * (qx - px), py + f * (qy - py)
            remaining -= seg
            px, py = qx, qy
        return path[-1]

    def plan(self, snapshot: SensorSnapshot, config) -> VelocityCommand:
        aligned = goal_alignment(snapshot, config, self.p.heading_gain)
        if aligned is not None:
            return aligned
        if self._needs_plan(snapshot):
            self._replan(snapshot, config)
        if not self.path:
            return STOP

        pose = snapshot.robot_pose
        tx, ty = self._lookahead_point(pose.x, pose.y)
        c, s = math.cos(pose.yaw), math.sin(pose.yaw)
        dx, dy = tx - pose.x, ty - pose.y
        alpha = math.atan2(-s * dx + c * dy, c * dx + s * dy)
        wyaw = max(-config.max_yaw_rate, min(config.max_yaw_rate, self.p.heading_gain * alpha))
        if abs(alpha) > math.pi / 2:
            return VelocityCommand(0.0, 0.0, wyaw)
        # Slow down while the body is still turning toward the path.
        speed = config.nominal_speed * max(math.cos(alpha), 0.2)
        return VelocityCommand(speed * math.cos(alpha), speed * math.sin(alpha), wyaw)

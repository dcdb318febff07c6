"""Top-down SVG plots of runs and the two-sided comparison bar chart.

Trajectory plots use a fixed scale of :data:`PT_PER_M` points per meter, so
the trajectory stroke drawn at ``footprint_width * PT_PER_M`` points is
exactly as wide as the robot in world units. Figures are built with the
object API (no pyplot state) so rendering is safe inside worker processes,
and SVG output is byte-stable: fixed hash salt, no date metadata, text kept
as text.
"""

from __future__ import annotations

import io
import math
from typing import Tuple

import matplotlib
from matplotlib.figure import Figure
from matplotlib.patches import Circle, Polygon

from .geometry import OrientedBox, bounding_extent
from .report import Comparison
from .scenario import TestDefinition
from .simulator import TrajectoryLog

PT_PER_M = 36.0
MARGIN_M = 1.0
TRAJECTORY_GID = "trajectory"

_SVG_RC = {"svg.hashsalt": "navstress", "svg.fonttype": "none", "path.simplify": False}


def _to_svg(fig: Figure) -> str:
    buf = io.StringIO()
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def _extent(trace: TrajectoryLog, test: TestDefinition) -> Tuple[float, float, float, float]:
    xs = [p[0] for p in test.mission.polyline()] + [s.pose.x for s in trace.samples]
    ys = [p[1] for p in test.mission.polyline()] + [s.pose.y for s in trace.samples]
    for o in test.obstacles:
        x0, y0, x1, y1 = bounding_extent(o.shape)
        xs += [x0, x1]
        ys += [y0, y1]
    return min(xs) - MARGIN_M, min(ys) - MARGIN_M, max(xs) + MARGIN_M, max(ys) + MARGIN_M


def annotations(trace: TrajectoryLog, test: TestDefinition) -> list:
    """Annotation lines: minimum distance always, minimum gap with two or more obstacles."""
    from .testbench import compute_metrics

    m = compute_metrics(trace, test)
    dist = "n/a" if not math.isfinite(m.min_obstacle_distance) else f"{m.min_obstacle_distance:.3f} m"
    lines = [f"min distance: {dist}"]
    if math.isfinite(m.min_obstacle_gap):
        lines.append(f"min gap: {m.min_obstacle_gap:.3f} m")
    return lines


def render_plot(trace: TrajectoryLog, test: TestDefinition) -> str:
    """Render one run as a top-down SVG document."""
    x0, y0, x1, y1 = _extent(trace, test)
    fig = Figure(figsize=((x1 - x0) * PT_PER_M / 72.0, (y1 - y0) * PT_PER_M / 72.0))
    ax = fig.add_axes((0.0, 0.0, 1.0, 1.0))
    ax.set_xlim(x0, x1)
    ax.set_ylim(y0, y1)
    ax.set_aspect("equal")
    ax.set_axis_off()

    for o in test.obstacles:
        if isinstance(o.shape, OrientedBox):
            patch = Polygon(o.shape.corners(), closed=True)
        else:
            patch = Circle(o.shape.center, o.shape.radius)
        patch.set(facecolor="#7f7f7f", edgecolor="#404040", linewidth=1.0, gid=f"obstacle-{o.id}")
        ax.add_patch(patch)

    poly = test.mission.polyline()
    ax.plot([p[0] for p in poly], [p[1] for p in poly], linestyle=":", color="#555555", linewidth=1.0, gid="mission")

    if trace.samples:
        ax.plot(
            [s.pose.x for s in trace.samples],
            [s.pose.y for s in trace.samples],
            color="#1f77b4",
            alpha=0.45,
            linewidth=test.robot.footprint_width * PT_PER_M,
            solid_capstyle="round",
            solid_joinstyle="round",
            gid=TRAJECTORY_GID,
        )
        ax.plot([s.pose.x for s in trace.samples], [s.pose.y for s in trace.samples], color="#0b3d66", linewidth=0.8)

    start, goal = test.mission.start, test.mission.goal
    ax.plot([start.x], [start.y], marker="o", color="#2ca02c", markersize=8, gid="start")
    ax.plot([goal.x], [goal.y], marker="*", color="#d62728", markersize=12, gid="goal")

    outcome = trace.terminal_event.value if trace.terminal_event else "incomplete"
    text = "\n".join([f"{test.name} | {trace.subject_id} | {outcome}", *annotations(trace, test)])
    ax.text(0.02, 0.98, text, transform=ax.transAxes, va="top", ha="left", fontsize=9, family="monospace")
    return _to_svg(fig)


def render_comparison(cmp: Comparison) -> str:
    """Two-sided bar chart: Success upward, SafetyStop downward, both subjects per family."""
    n = len(cmp.rows)
    fig = Figure(figsize=(max(6.0, 1.3 * n + 2.0), 5.0))
    ax = fig.add_subplot(1, 1, 1)
    xs = list(range(n))
    w = 0.38
    a_x = [x - w / 2 for x in xs]
    b_x = [x + w / 2 for x in xs]
    ax.bar(a_x, [r.success_a for r in cmp.rows], w, color="#9ecae1", label=f"{cmp.subject_a} Succ.")
    ax.bar(b_x, [r.success_b for r in cmp.rows], w, color="#3182bd", label=f"{cmp.subject_b} Succ.")
    ax.bar(a_x, [-r.safety_stop_a for r in cmp.rows], w, color="#fdae6b", label=f"{cmp.subject_a} S-Stop")
    ax.bar(b_x, [-r.safety_stop_b for r in cmp.rows], w, color="#e6550d", label=f"{cmp.subject_b} S-Stop")
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xticks(xs)
    ax.set_xticklabels([r.family for r in cmp.rows])
    ax.set_ylim(-105.0, 105.0)
    ax.set_yticks([-100, -50, 0, 50, 100])
    ax.set_yticklabels(["100%", "50%", "0%", "50%", "100%"])
    ax.set_ylabel("S-Stop  |  Success")
    ax.set_title(f"{cmp.subject_b} vs {cmp.subject_a} on {cmp.suite or '-'}")
    ax.legend(loc="lower left", fontsize=8, ncol=2)
    fig.tight_layout()
    return _to_svg(fig)

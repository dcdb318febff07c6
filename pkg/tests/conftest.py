"""Shared pytest fixtures for the navstress test suite.

Provides factories for test definitions and handcrafted trajectory logs,
the bundled seed corpus, and isolated output directories so individual
test modules stay focused on assertions rather than setup.

Long-running acceptance checks are marked ``slow`` and only run with
``--runslow``.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple

import pytest

from navstress.geometry import CircleShape, ObstacleShape, OrientedBox, Pose2D
from navstress.scenario import Mission, Obstacle, RobotConfig, TestDefinition, builtin_seeds, default_time_budget
from navstress.simulator import Event, EventKind, Sample, TrajectoryLog
from navstress.subjects import STOP, VelocityCommand


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")
    parser.addoption("--update-golden", action="store_true", default=False, help="re-record files under tests/fixtures")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


NORTH = math.pi / 2
FIXTURES = Path(__file__).parent / "fixtures"


def box(x: float, y: float, length: float = 1.0, width: float = 1.0, yaw: float = 0.0) -> OrientedBox:
    return OrientedBox(Pose2D(x, y, yaw), length, width)


def cylinder(x: float, y: float, diameter: float = 1.0) -> CircleShape:
    return CircleShape(x, y, diameter)


@pytest.fixture
def out_dir(tmp_path: Path) -> Path:
    """Return a not-yet-existing output directory inside ``tmp_path``.

    Commands refuse to overwrite existing outputs, so the directory is left
    for the code under test to create.
    """
    return tmp_path / "out"


@pytest.fixture
def robot() -> RobotConfig:
    """Default robot configuration (1.05 x 0.55 m footprint, 0.5 m/s)."""
    return RobotConfig()


@pytest.fixture
def make_test(robot: RobotConfig):
    """Factory for test definitions on the 10 m northbound mission.

    Obstacles are given as shapes and receive ids ``o0``, ``o1``, ...
    """

    def _make(
        obstacles: Sequence[ObstacleShape] = (),
        *,
        name: str = "case",
        start: Pose2D = Pose2D(0.0, 0.0, NORTH),
        waypoints: Sequence[Pose2D] = (Pose2D(0.0, 10.0, NORTH),),
        time_budget: Optional[float] = None,
        robot_config: Optional[RobotConfig] = None,
        waypoint_mutation: bool = False,
    ) -> TestDefinition:
        rc = robot_config or robot
        budget = time_budget if time_budget is not None else default_time_budget(start, waypoints, rc)
        return TestDefinition(
            name=name,
            robot=rc,
            mission=Mission(start, tuple(waypoints), budget),
            obstacles=tuple(Obstacle(f"o{i}", s) for i, s in enumerate(obstacles)),
            waypoint_mutation=waypoint_mutation,
        )

    return _make


@pytest.fixture(scope="session")
def seeds():
    """Bundled seed scenarios keyed by name."""
    return {t.name: t for t in builtin_seeds()}


@pytest.fixture
def make_log():
    """Factory for handcrafted trajectory logs.

    ``poses`` are ``(x, y, yaw)`` tuples sampled every ``dt``; the terminal
    event (if any) is stamped with the last sample time. ``extra_events``
    are ``(t, kind)`` pairs inserted before the terminal event.
    """

    def _make(
        poses: Iterable[Tuple[float, float, float]],
        terminal: Optional[EventKind] = EventKind.GOAL_REACHED,
        *,
        distances: Optional[Sequence[float]] = None,
        extra_events: Sequence[Tuple[float, EventKind]] = (),
        dt: float = 0.05,
        command: VelocityCommand = STOP,
    ) -> TrajectoryLog:
        poses = list(poses)
        ds = list(distances) if distances is not None else [math.inf] * len(poses)
        samples = [Sample(round(i * dt, 9), Pose2D(*p), command, d) for i, (p, d) in enumerate(zip(poses, ds))]
        events = [Event(t, k) for t, k in extra_events]
        if terminal is not None:
            events.append(Event(samples[-1].t if samples else 0.0, terminal))
        return TrajectoryLog("case", "handcrafted", dt, samples, events)

    return _make


@pytest.fixture
def golden(request):
    """Compare text against a recorded file under ``tests/fixtures``.

    ``golden(name, text, recorded_with=None)``. A missing file, or
    ``--update-golden``, records *text* and skips. *recorded_with* names the
    tool version the bytes depend on; it is stored in ``<name>.version`` and a
    mismatch skips instead of failing.
    """
    update = request.config.getoption("--update-golden")

    def _check(name: str, text: str, recorded_with: Optional[str] = None) -> None:
        path = FIXTURES / name
        stamp = path.with_name(path.name + ".version")
        if update or not path.exists():
            FIXTURES.mkdir(exist_ok=True)
            path.write_text(text, encoding="utf-8")
            if recorded_with is not None:
                stamp.write_text(recorded_with + "\n", encoding="utf-8")
            pytest.skip(f"recorded {path.name}; commit it")
        if recorded_with is not None and stamp.exists():
            expected = stamp.read_text(encoding="utf-8").strip()
            if expected != recorded_with:
                pytest.skip(f"{path.name} was recorded with {expected}, running {recorded_with}")
        assert text == path.read_text(encoding="utf-8")

    return _check

"""Test execution, outcome classification and per-test metrics.

A run produces a :class:`TrajectoryLog`; everything reported about it
(outcome category, metrics) is recomputed from that log and the test
definition, never from simulator internals.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .errors import EmptySuite, MalformedLog, NavstressError
from .geometry import min_pairwise_gap, point_polyline_distance
from .logfile import LOG_SUFFIX, read_log, write_log
from .scenario import TestDefinition, TestSuite, family_of
from .simulator import EventKind, TrajectoryLog, run_test
from .subjects import SubjectSpec

log = logging.getLogger(__name__)

LOGS_DIR = "logs"
RESULTS_DIR = "results"
PLOTS_DIR = "plots"


class Category(str, enum.Enum):
    SUCCESS = "Success"
    SAFETY_STOP = "SafetyStop"
    TIMEOUT = "Timeout"
    COLLISION = "Collision"
    ERROR = "Error"


CATEGORIES: Tuple[Category, ...] = tuple(Category)

_TERMINAL_TO_CATEGORY = {
    EventKind.SAFETY_STOP: Category.SAFETY_STOP,
    EventKind.TIMEOUT: Category.TIMEOUT,
    EventKind.COLLISION: Category.COLLISION,
    EventKind.SUBJECT_ERROR: Category.ERROR,
}


@dataclass(frozen=True)
class TestOutcome:
    __test__ = False

    category: Category

    @property
    def is_failure(self) -> bool:
        return self.category in (Category.SAFETY_STOP, Category.COLLISION)


def _num(v: float) -> Optional[float]:
    return v if math.isfinite(v) else None


def _unnum(v: Optional[float]) -> float:
    return math.inf if v is None else float(v)


@dataclass(frozen=True)
class TestMetrics:
    """Performance metrics of one run; ``inf`` marks an undefined distance."""
    __test__ = False

    min_obstacle_distance: float
    min_obstacle_gap: float
    path_length: float
    deviation: float
    duration: float

    def to_dict(self) -> Dict[str, Optional[float]]:
        return {
            "min_obstacle_distance": _num(self.min_obstacle_distance),
            "min_obstacle_gap": _num(self.min_obstacle_gap),
            "path_length": self.path_length,
            "deviation": self.deviation,
            "duration": self.duration,
        }

    @staticmethod
    def from_dict(d: Dict[str, Any]) -> "TestMetrics":
        return TestMetrics(
            min_obstacle_distance=_unnum(d.get("min_obstacle_distance")),
            min_obstacle_gap=_unnum(d.get("min_obstacle_gap")),
            path_length=float(d["path_length"]),
            deviation=float(d["deviation"]),
            duration=float(d["duration"]),
        )


NO_METRICS = TestMetrics(math.inf, math.inf, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class TestResult:
    """Outcome and metrics of one test against one subject.

    Attributes:
        test_name: Name of the executed test definition.
        subject_id: Subject kind plus non-default parameters.
        outcome: Classified category.
        metrics: Metrics recomputed from the log.
        log_path: Log file relative to the run directory, if one was written.
        error: Failure message for ``Error`` outcomes.
    """
    __test__ = False

    test_name: str
    subject_id: str
    outcome: TestOutcome
    metrics: TestMetrics
    log_path: Optional[str] = None
    error: str = ""

    @property
    def family(self) -> str:
        return family_of(self.test_name)

    @property
    def category(self) -> Category:
        return self.outcome.category

    def to_dict(self) -> Dict[str, Any]:
        return {
            "test": self.test_name,
            "subject": self.subject_id,
            "category": self.category.value,
            "metrics": self.metrics.to_dict(),
            "log": self.log_path,
            "error": self.error,
        }

    @staticmethod
    def from_dict(d: Dict[str, Any]) -> "TestResult":
        return TestResult(
            test_name=d["test"],
            subject_id=d["subject"],
            outcome=TestOutcome(Category(d["category"])),
            metrics=TestMetrics.from_dict(d["metrics"]),
            log_path=d.get("log"),
            error=d.get("error", ""),
        )


def error_result(test_name: str, subject_id: str, message: str) -> TestResult:
    return TestResult(test_name, subject_id, TestOutcome(Category.ERROR), NO_METRICS, error=message)


# --- oracles --------------------------------------------------------------------

def _check_complete(trace: TrajectoryLog) -> None:
    if not trace.samples:
        raise MalformedLog(f"{trace.test_name}: log has no samples")
    times = [s.t for s in trace.samples]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise MalformedLog(f"{trace.test_name}: sample times are not strictly increasing")
    terminals = [e for e in trace.events if e.kind.terminal]
    if not terminals:
        raise MalformedLog(f"{trace.test_name}: log has no terminal event")
    if len(terminals) > 1 or trace.events[-1] is not terminals[0]:
        kinds = ", ".join(e.kind.value for e in terminals)
        raise MalformedLog(f"{trace.test_name}: expected exactly one terminal event as the last event, got {kinds}")


def classify_outcome(trace: TrajectoryLog, test: TestDefinition) -> TestOutcome:
    """Map a complete log to exactly one category.

    Raises:
        MalformedLog: No samples, non-increasing times, zero or several
            terminal events, or a ``GoalReached`` whose final pose lies
            outside the goal tolerances.
    """
    _check_complete(trace)
    terminal = trace.terminal_event
    if terminal is not EventKind.GOAL_REACHED:
        return TestOutcome(_TERMINAL_TO_CATEGORY[terminal])

    goal, pose, robot = test.mission.goal, trace.final_pose, test.robot
    yaw_err = abs(math.remainder(goal.yaw - pose.yaw, 2.0 * math.pi))
    if pose.distance_to(goal) > robot.goal_position_tolerance or yaw_err > robot.goal_yaw_tolerance:
        raise MalformedLog(f"{trace.test_name}: GoalReached at ({pose.x:.3f}, {pose.y:.3f}) outside goal tolerance")
    return TestOutcome(Category.SUCCESS)


def compute_metrics(trace: TrajectoryLog, test: TestDefinition) -> TestMetrics:
    """Recompute every metric from *trace* and *test*."""
    if not trace.samples:
        raise MalformedLog(f"{trace.test_name}: log has no samples")
    pts = [(s.pose.x, s.pose.y) for s in trace.samples]
    polyline = test.mission.polyline()
    return TestMetrics(
        min_obstacle_distance=min(s.min_obstacle_distance for s in trace.samples),
        min_obstacle_gap=min_pairwise_gap(test.shapes()),
        path_length=sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(pts, pts[1:])),
        deviation=max(point_polyline_distance(x, y, polyline) for x, y in pts),
        duration=trace.samples[-1].t,
    )


# --- execution ------------------------------------------------------------------

def execute_test(
    test: TestDefinition,
    spec: SubjectSpec,
    out_dir: Optional[Path] = None,
    *,
    plot: bool = False,
) -> Tuple[TestResult, Optional[TrajectoryLog]]:
    """Run one test with a fresh subject; never raises for a valid test.

    With *out_dir* the log is written to ``logs/<name>.ndjson`` and, if
    *plot* is set, an SVG to ``plots/<name>.svg``.
    """
    try:
        subject = spec.build()
    except NavstressError as e:
        return error_result(test.name, spec.subject_id, str(e)), None
    try:
        trace = run_test(test, subject)
    except Exception as e:
        log.exception("%s: simulation crashed", test.name)
        return error_result(test.name, spec.subject_id, f"{type(e).__name__}: {e}"), None
    finally:
        subject.close()

    try:
        outcome = classify_outcome(trace, test)
        metrics = compute_metrics(trace, test)
    except MalformedLog as e:
        return error_result(test.name, spec.subject_id, str(e)), trace

    log_rel = None
    if out_dir is not None:
        log_rel = f"{LOGS_DIR}/{test.name}{LOG_SUFFIX}"
        write_log(trace, out_dir / log_rel)
        if plot:
            from .plotting import render_plot

            plot_path = out_dir / PLOTS_DIR / f"{test.name}.svg"
            plot_path.parent.mkdir(parents=True, exist_ok=True)
            plot_path.write_text(render_plot(trace, test), encoding="utf-8")

    error = trace.events[-1].detail if outcome.category is Category.ERROR else ""
    return TestResult(test.name, spec.subject_id, outcome, metrics, log_rel, error), trace


def _execute_task(args) -> TestResult:
    test, spec, out_dir, plot = args
    return execute_test(test, spec, out_dir, plot=plot)[0]


def map_tests(
    tests: Sequence[TestDefinition],
    spec: SubjectSpec,
    *,
    workers: int = 1,
    out_dir: Optional[Path] = None,
    plot: bool = False,
    executor: Optional[Executor] = None,
) -> List[TestResult]:
    """Execute *tests* on up to *workers* processes, results in input order.

    An open *executor* is reused instead of starting a new pool.
    """
    tasks = [(t, spec, out_dir, plot) for t in tests]
    if executor is not None:
        return list(executor.map(_execute_task, tasks))
    if workers <= 1 or len(tasks) <= 1:
        return [_execute_task(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_execute_task, tasks))


def run_suite(
    suite: TestSuite,
    spec: SubjectSpec,
    workers: int = 1,
    *,
    out_dir: Optional[Path] = None,
    plot: bool = False,
) -> List[TestResult]:
    """One result per suite member, in suite order, whatever the worker count.

    Members whose file could not be loaded become ``Error`` results.

    Raises:
        EmptySuite: The suite has no members.
    """
    if len(suite) == 0:
        raise EmptySuite(f"suite {suite.name!r} has no members")
    runnable = [m.test for m in suite.members if m.test is not None]
    executed = iter(map_tests(runnable, spec, workers=workers, out_dir=out_dir, plot=plot))

    results: List[TestResult] = []
    for m in suite.members:
        if m.test is None:
            r = error_result(m.name, spec.subject_id, m.error or "test definition not loaded")
        else:
            r = next(executed)
        log.info("%-32s %s", r.test_name, r.category.value)
        results.append(r)
    if out_dir is not None:
        for r in results:
            write_result(r, out_dir / RESULTS_DIR / f"{r.test_name}.json")
    return results


# --- persistence ----------------------------------------------------------------

def write_result(result: TestResult, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_result(path: Path) -> TestResult:
    return TestResult.from_dict(json.loads(path.read_text(encoding="utf-8")))


def recompute(result: TestResult, test: TestDefinition, run_dir: Path) -> TestMetrics:
    """Metrics recomputed from the log a result points to."""
    if result.log_path is None:
        raise MalformedLog(f"{result.test_name}: result has no log")
    return compute_metrics(read_log(run_dir / result.log_path), test)

"""Declarative test definitions, suite manifests and the bundled seed corpus.

A test definition is a YAML document (``schema: 1``) describing the robot
configuration, the mission and the static obstacles of one executable
scenario. Lengths are meters. Angles may be written in degrees
(``yaw_deg``) or radians (``yaw``); the serializer always writes radians so
that ``parse(serialize(t)) == t`` holds exactly.

Unknown keys are rejected: a silently ignored typo in a benchmark scenario
would corrupt every result computed from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

import yaml

from .errors import SchemaError, SuiteFormatError, ValidationError
from .geometry import (
    CircleShape,
    ObstacleShape,
    OrientedBox,
    Pose2D,
    footprint_at,
    shape_distance,
)

SCHEMA_VERSION = 1

# Quadruped-scale defaults; every one is overridable in YAML.
DEFAULT_FOOTPRINT_LENGTH = 1.05
DEFAULT_FOOTPRINT_WIDTH = 0.55
DEFAULT_NOMINAL_SPEED = 0.5
DEFAULT_MAX_YAW_RATE = 1.0
DEFAULT_SENSING_RADIUS = 5.0
DEFAULT_GOAL_POSITION_TOLERANCE = 0.25
DEFAULT_GOAL_YAW_TOLERANCE = 0.35
DEFAULT_SAFETY_MARGIN = 0.05
TIME_BUDGET_FACTOR = 5.0

SEED_NAMES = ("boxes1", "boxes2", "corridor", "cylinders", "l_corridor")


def family_of(test_name: str) -> str:
    """Scenario family of a test: its name up to the first ``-``."""
    return test_name.split("-", 1)[0]


@dataclass(frozen=True)
class RobotConfig:
    """Robot parameters relevant to navigation (footprint, limits, tolerances)."""
    footprint_length: float = DEFAULT_FOOTPRINT_LENGTH
    footprint_width: float = DEFAULT_FOOTPRINT_WIDTH
    nominal_speed: float = DEFAULT_NOMINAL_SPEED
    max_yaw_rate: float = DEFAULT_MAX_YAW_RATE
    sensing_radius: float = DEFAULT_SENSING_RADIUS
    goal_position_tolerance: float = DEFAULT_GOAL_POSITION_TOLERANCE
    goal_yaw_tolerance: float = DEFAULT_GOAL_YAW_TOLERANCE
    safety_margin: float = DEFAULT_SAFETY_MARGIN

    def footprint(self, pose: Pose2D) -> OrientedBox:
        return footprint_at(pose, self.footprint_length, self.footprint_width)

    def validate(self) -> None:
        for name in (
            "footprint_length",
            "footprint_width",
            "nominal_speed",
            "max_yaw_rate",
            "sensing_radius",
            "goal_position_tolerance",
            "goal_yaw_tolerance",
            "safety_margin",
        ):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"robot.{name} must be strictly positive, got {value}")
        if self.goal_position_tolerance >= self.sensing_radius:
            raise ValidationError("robot.goal_position_tolerance must be smaller than robot.sensing_radius")


@dataclass(frozen=True)
class Mission:
    """Start pose, ordered waypoints (last one is the goal) and time budget."""
    start: Pose2D
    waypoints: Tuple[Pose2D, ...]
    time_budget: float

    @property
    def goal(self) -> Pose2D:
        return self.waypoints[-1]

    def polyline(self) -> List[Tuple[float, float]]:
        return [(p.x, p.y) for p in (self.start, *self.waypoints)]

    def path_length(self) -> float:
        pts = self.polyline()
        return sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(pts, pts[1:]))


def default_time_budget(start: Pose2D, waypoints: Iterable[Pose2D], robot: RobotConfig) -> float:
    pts = [start, *waypoints]
    length = sum(a.distance_to(b) for a, b in zip(pts, pts[1:]))
    return TIME_BUDGET_FACTOR * length / robot.nominal_speed


@dataclass(frozen=True)
class Obstacle:
    id: str
    shape: ObstacleShape


@dataclass(frozen=True)
class TestDefinition:
    """One executable scenario.

    Attributes:
        name: Unique test name; the part before the first ``-`` is the family.
        robot: Robot configuration.
        mission: Start, waypoints and time budget.
        obstacles: Static obstacles with unique ids.
        rng_seed: Seed handed to the subject on reset.
        waypoint_mutation: Whether the generator may move mission poses.
    """
    __test__ = False

    name: str
    robot: RobotConfig
    mission: Mission
    obstacles: Tuple[Obstacle, ...] = ()
    rng_seed: int = 0
    waypoint_mutation: bool = False

    @property
    def family(self) -> str:
        return family_of(self.name)

    def shapes(self) -> List[ObstacleShape]:
        return [o.shape for o in self.obstacles]

    def clearance(self, pose: Pose2D) -> float:
        """Footprint-to-obstacle distance at *pose* (``inf`` without obstacles)."""
        fp = self.robot.footprint(pose)
        return min((shape_distance(fp, o.shape) for o in self.obstacles), default=math.inf)

    def validate(self) -> None:
        """Raise :class:`ValidationError` on the first broken invariant."""
        self.robot.validate()
        m = self.mission
        if not m.waypoints:
            raise ValidationError("mission needs at least one waypoint")
        if not (math.isfinite(m.time_budget) and m.time_budget > 0):
            raise ValidationError(f"mission.time_budget must be positive, got {m.time_budget}")
        for i, (a, b) in enumerate(zip(m.waypoints, m.waypoints[1:])):
            if a == b:
                raise ValidationError(f"mission.waypoints[{i}] and [{i + 1}] are identical")
        if isinstance(self.rng_seed, bool) or not isinstance(self.rng_seed, int) or self.rng_seed < 0:
            raise ValidationError(f"rng_seed must be an unsigned integer, got {self.rng_seed!r}")
        seen = set()
        for o in self.obstacles:
            if o.id in seen:
                raise ValidationError(f"duplicate obstacle id {o.id!r}")
            seen.add(o.id)
        if self.clearance(m.start) <= 0:
            raise ValidationError("start pose is inside an obstacle")
        if self.clearance(m.goal) <= 0:
            raise ValidationError("goal pose is inside an obstacle")

    def is_valid(self) -> bool:
        try:
            self.validate()
        except ValidationError:
            return False
        return True


# --- YAML reading ---------------------------------------------------------------

def _join(path: str, key: Any) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else str(key)


def _mapping(node: Any, path: str) -> Dict[str, Any]:
    if not isinstance(node, dict):
        raise SchemaError(path, "expected a mapping")
    return node


def _check_keys(node: Dict[str, Any], path: str, required: Iterable[str], optional: Iterable[str]) -> None:
    required = list(required)
    allowed = set(required) | set(optional)
    for key in node:
        if key not in allowed:
            raise SchemaError(_join(path, key), "unknown field")
    for key in required:
        if key not in node:
            raise SchemaError(_join(path, key), "missing required field")


def _number(node: Dict[str, Any], key: str, path: str, default: Optional[float] = None) -> float:
    if key not in node:
        if default is None:
            raise SchemaError(_join(path, key), "missing required field")
        return default
    v = node[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(_join(path, key), f"expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise SchemaError(_join(path, key), "must be finite")
    return v


def _angle(node: Dict[str, Any], key: str, path: str, default: Optional[float] = None) -> float:
    """Read ``<key>`` in radians or ``<key>_deg`` in degrees, never both."""
    deg_key = f"{key}_deg"
    if key in node and deg_key in node:
        raise SchemaError(_join(path, key), f"give either {key} or {deg_key}, not both")
    if deg_key in node:
        return math.radians(_number(node, deg_key, path))
    return _number(node, key, path, default)


def _pose(node: Any, path: str) -> Pose2D:
    node = _mapping(node, path)
    _check_keys(node, path, ("x", "y"), ("yaw", "yaw_deg"))
    return Pose2D(_number(node, "x", path), _number(node, "y", path), _angle(node, "yaw", path, 0.0))


def _robot(node: Any, path: str) -> RobotConfig:
    node = _mapping(node, path)
    _check_keys(
        node,
        path,
        (),
        (
            "footprint",
            "nominal_speed",
            "max_yaw_rate",
            "max_yaw_rate_deg",
            "sensing_radius",
            "goal_position_tolerance",
            "goal_yaw_tolerance",
            "goal_yaw_tolerance_deg",
            "safety_margin",
        ),
    )
    length, width = DEFAULT_FOOTPRINT_LENGTH, DEFAULT_FOOTPRINT_WIDTH
    if "footprint" in node:
        fp_path = _join(path, "footprint")
        fp = _mapping(node["footprint"], fp_path)
        _check_keys(fp, fp_path, (), ("length", "width"))
        length = _number(fp, "length", fp_path, DEFAULT_FOOTPRINT_LENGTH)
        width = _number(fp, "width", fp_path, DEFAULT_FOOTPRINT_WIDTH)
    return RobotConfig(
        footprint_length=length,
        footprint_width=width,
        nominal_speed=_number(node, "nominal_speed", path, DEFAULT_NOMINAL_SPEED),
        max_yaw_rate=_angle(node, "max_yaw_rate", path, DEFAULT_MAX_YAW_RATE),
        sensing_radius=_number(node, "sensing_radius", path, DEFAULT_SENSING_RADIUS),
        goal_position_tolerance=_number(node, "goal_position_tolerance", path, DEFAULT_GOAL_POSITION_TOLERANCE),
        goal_yaw_tolerance=_angle(node, "goal_yaw_tolerance", path, DEFAULT_GOAL_YAW_TOLERANCE),
        safety_margin=_number(node, "safety_margin", path, DEFAULT_SAFETY_MARGIN),
    )


def _shape(kind: str, node: Any, path: str) -> ObstacleShape:
    node = _mapping(node, path)
    try:
        if kind == "box":
            _check_keys(node, path, ("x", "y", "length", "width"), ("yaw", "yaw_deg"))
            center = Pose2D(_number(node, "x", path), _number(node, "y", path), _angle(node, "yaw", path, 0.0))
            return OrientedBox(center, _number(node, "length", path), _number(node, "width", path))
        _check_keys(node, path, ("x", "y", "diameter"), ())
        return CircleShape(_number(node, "x", path), _number(node, "y", path), _number(node, "diameter", path))
    except ValueError as e:
        raise SchemaError(path, str(e)) from e


def _obstacle(node: Any, path: str) -> Obstacle:
    node = _mapping(node, path)
    _check_keys(node, path, ("id",), ("box", "cylinder"))
    oid = node["id"]
    if not isinstance(oid, (str, int)) or isinstance(oid, bool):
        raise SchemaError(_join(path, "id"), "expected a string")
    kinds = [k for k in ("box", "cylinder") if k in node]
    if len(kinds) != 1:
        raise SchemaError(path, "exactly one of 'box' or 'cylinder' is required")
    kind = kinds[0]
    return Obstacle(id=str(oid), shape=_shape(kind, node[kind], _join(path, kind)))


def definition_from_dict(doc: Any) -> TestDefinition:
    """Build and validate a :class:`TestDefinition` from a parsed YAML mapping."""
    doc = _mapping(doc, "")
    _check_keys(doc, "", ("schema", "name", "mission"), ("rng_seed", "waypoint_mutation", "robot", "obstacles"))
    if doc["schema"] != SCHEMA_VERSION:
        raise SchemaError("schema", f"unsupported schema version {doc['schema']!r} (expected {SCHEMA_VERSION})")
    name = doc["name"]
    if not isinstance(name, str) or not name:
        raise SchemaError("name", "expected a non-empty string")

    rng_seed = doc.get("rng_seed", 0)
    if isinstance(rng_seed, bool) or not isinstance(rng_seed, int):
        raise SchemaError("rng_seed", f"expected an integer, got {rng_seed!r}")
    waypoint_mutation = doc.get("waypoint_mutation", False)
    if not isinstance(waypoint_mutation, bool):
        raise SchemaError("waypoint_mutation", "expected true or false")

    robot = _robot(doc["robot"], "robot") if "robot" in doc else RobotConfig()
    robot.validate()

    m = _mapping(doc["mission"], "mission")
    _check_keys(m, "mission", ("start", "waypoints"), ("time_budget",))
    start = _pose(m["start"], "mission.start")
    wps_node = m["waypoints"]
    if not isinstance(wps_node, list) or not wps_node:
        raise SchemaError("mission.waypoints", "expected a non-empty list")
    waypoints = tuple(_pose(w, f"mission.waypoints[{i}]") for i, w in enumerate(wps_node))
    budget = _number(m, "time_budget", "mission", default_time_budget(start, waypoints, robot))

    obs_node = doc.get("obstacles", []) or []
    if not isinstance(obs_node, list):
        raise SchemaError("obstacles", "expected a list")
    obstacles = tuple(_obstacle(o, f"obstacles[{i}]") for i, o in enumerate(obs_node))

    test = TestDefinition(
        name=name,
        robot=robot,
        mission=Mission(start=start, waypoints=waypoints, time_budget=budget),
        obstacles=obstacles,
        rng_seed=rng_seed,
        waypoint_mutation=waypoint_mutation,
    )
    test.validate()
    return test


def parse_test_definition(text: str) -> TestDefinition:
    """Parse and validate one YAML test definition.

    Raises:
        SchemaError: Unknown, missing or mistyped field (``.path`` names it).
        ValidationError: An invariant such as "start not inside an obstacle" fails.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise SchemaError("", f"invalid YAML: {e}") from e
    return definition_from_dict(doc)


def load_test_definition(path: Path) -> TestDefinition:
    return parse_test_definition(Path(path).read_text(encoding="utf-8"))


# --- YAML writing ---------------------------------------------------------------

def _pose_dict(p: Pose2D) -> Dict[str, float]:
    return {"x": p.x, "y": p.y, "yaw": p.yaw}


def shape_to_dict(shape: ObstacleShape) -> Dict[str, Any]:
    if isinstance(shape, OrientedBox):
        return {"box": {**_pose_dict(shape.center), "length": shape.length, "width": shape.width}}
    return {"cylinder": {"x": shape.x, "y": shape.y, "diameter": shape.diameter}}


def definition_to_dict(t: TestDefinition) -> Dict[str, Any]:
    r = t.robot
    return {
        "schema": SCHEMA_VERSION,
        "name": t.name,
        "rng_seed": t.rng_seed,
        "waypoint_mutation": t.waypoint_mutation,
        "robot": {
            "footprint": {"length": r.footprint_length, "width": r.footprint_width},
            "nominal_speed": r.nominal_speed,
            "max_yaw_rate": r.max_yaw_rate,
            "sensing_radius": r.sensing_radius,
            "goal_position_tolerance": r.goal_position_tolerance,
            "goal_yaw_tolerance": r.goal_yaw_tolerance,
            "safety_margin": r.safety_margin,
        },
        "mission": {
            "start": _pose_dict(t.mission.start),
            "waypoints": [_pose_dict(w) for w in t.mission.waypoints],
            "time_budget": t.mission.time_budget,
        },
        "obstacles": [{"id": o.id, **shape_to_dict(o.shape)} for o in t.obstacles],
    }


def serialize_test_definition(t: TestDefinition) -> str:
    """Serialize *t* to YAML; angles are written in radians."""
    return yaml.safe_dump(definition_to_dict(t), sort_keys=False, default_flow_style=False)


# --- bundled seeds --------------------------------------------------------------

def seed_text(name: str) -> str:
    """Raw YAML (header comments included) of the bundled seed *name*."""
    if name not in SEED_NAMES:
        raise KeyError(f"unknown seed {name!r}; bundled seeds: {', '.join(SEED_NAMES)}")
    return resources.files("navstress.seeds").joinpath(f"{name}.yaml").read_text(encoding="utf-8")


def builtin_seeds() -> List[TestDefinition]:
    """The five bundled seed scenarios, all on the 10 m mission (0,0) -> (0,10)."""
    return [parse_test_definition(seed_text(n)) for n in SEED_NAMES]


# --- suites ---------------------------------------------------------------------

@dataclass(frozen=True)
class SuiteMember:
    """One suite entry with its search lineage.

    ``test`` is ``None`` and ``error`` is set when the member file could not
    be loaded; the runner reports such members as Error outcomes.
    """
    name: str
    file: str
    test: Optional[TestDefinition] = None
    parent: Optional[str] = None
    iteration: int = 0
    mutation: Optional[Dict[str, Any]] = None
    error: Optional[str] = None


@dataclass
class TestSuite:
    """Ordered collection of test definitions plus provenance."""
    __test__ = False

    name: str
    members: List[SuiteMember] = field(default_factory=list)
    seed: Optional[str] = None
    subject_id: Optional[str] = None
    config: Optional[Dict[str, Any]] = None

    @classmethod
    def from_tests(cls, name: str, tests: Iterable[TestDefinition]) -> "TestSuite":
        return cls(name=name, members=[SuiteMember(name=t.name, file=f"tests/{t.name}.yaml", test=t) for t in tests])

    def __len__(self) -> int:
        return len(self.members)

    def names(self) -> List[str]:
        return [m.name for m in self.members]


MANIFEST = "manifest.yaml"


def write_suite(suite: TestSuite, out_dir: Path) -> Path:
    """Write member YAML files and ``manifest.yaml`` under *out_dir*."""
    out_dir = Path(out_dir)
    (out_dir / "tests").mkdir(parents=True, exist_ok=True)
    members = []
    for m in suite.members:
        if m.test is not None:
            (out_dir / m.file).write_text(serialize_test_definition(m.test), encoding="utf-8")
        members.append(
            {
                "name": m.name,
                "file": m.file,
                "parent": m.parent,
                "iteration": m.iteration,
                "mutation": m.mutation,
            }
        )
    manifest = {
        "schema": SCHEMA_VERSION,
        "suite": suite.name,
        "seed": suite.seed,
        "subject": suite.subject_id,
        "config": suite.config,
        "count": len(members),
        "members": members,
    }
    path = out_dir / MANIFEST
    path.write_text(yaml.safe_dump(manifest, sort_keys=False, default_flow_style=False), encoding="utf-8")
    return path


def _read_one_suite(suite_dir: Path) -> TestSuite:
    try:
        doc = yaml.safe_load((suite_dir / MANIFEST).read_text(encoding="utf-8"))
        doc = _mapping(doc, "")
        _check_keys(doc, "", ("schema", "suite", "members"), ("seed", "subject", "config", "count"))
        if doc["schema"] != SCHEMA_VERSION:
            raise SchemaError("schema", f"unsupported schema version {doc['schema']!r}")
        if not isinstance(doc["members"], list):
            raise SchemaError("members", "expected a list")
    except (OSError, yaml.YAMLError, SchemaError) as e:
        raise SuiteFormatError(f"{suite_dir / MANIFEST}: {e}") from e

    members: List[SuiteMember] = []
    for i, entry in enumerate(doc["members"]):
        if not isinstance(entry, dict) or "name" not in entry or "file" not in entry:
            raise SuiteFormatError(f"{suite_dir / MANIFEST}: members[{i}] needs 'name' and 'file'")
        try:
            iteration = int(entry.get("iteration") or 0)
        except (TypeError, ValueError):
            raise SuiteFormatError(
                f"{suite_dir / MANIFEST}: members[{i}].iteration must be an integer, got {entry['iteration']!r}"
            )
        common = dict(
            name=str(entry["name"]),
            file=str(entry["file"]),
            parent=entry.get("parent"),
            iteration=iteration,
            mutation=entry.get("mutation"),
        )
        try:
            test = load_test_definition(suite_dir / entry["file"])
            members.append(SuiteMember(test=test, **common))
        except (OSError, ValueError, SchemaError, ValidationError) as e:
            members.append(SuiteMember(error=f"{type(e).__name__}: {e}", **common))
    return TestSuite(
        name=str(doc["suite"]),
        members=members,
        seed=doc.get("seed"),
        subject_id=doc.get("subject"),
        config=doc.get("config"),
    )


def read_suite(path: Path) -> TestSuite:
    """Read a suite directory, or a directory whose sub-directories are suites.

    Sub-suites are concatenated in sorted directory order.

    Raises:
        SuiteFormatError: No manifest found, or a manifest is unreadable.
    """
    path = Path(path)
    if (path / MANIFEST).is_file():
        return _read_one_suite(path)
    subdirs = sorted(p for p in path.iterdir() if (p / MANIFEST).is_file()) if path.is_dir() else []
    if not subdirs:
        raise SuiteFormatError(f"no {MANIFEST} found in {path} or its sub-directories")
    parts = [_read_one_suite(p) for p in subdirs]
    members = []
    for sub_dir, part in zip(subdirs, parts):
        for m in part.members:
            members.append(SuiteMember(
                name=m.name,
                file=f"{sub_dir.name}/{m.file}",
                test=m.test,
                parent=m.parent,
                iteration=m.iteration,
                mutation=m.mutation,
                error=m.error,
            ))
    subjects = {p.subject_id for p in parts}
    return TestSuite(
        name=path.name,
        members=members,
        seed=None,
        subject_id=subjects.pop() if len(subjects) == 1 else None,
    )

"""Search-based suite generation.

A (1+λ) hill climber with restarts evolves a seed test definition toward
challenging variants. Each iteration mutates the incumbent λ times (moving,
resizing or rotating one obstacle, or moving one mission pose), evaluates
the children in the worker pool and keeps the best child when it ranks
strictly better than the incumbent. After ``restart_after`` iterations
without improvement the search restarts from the seed.

Fitness is the run's minimum obstacle distance (lower is more challenging).
Selection ranks outcomes first: SafetyStop and Collision beat Success and
Timeout, which beat Error; fitness breaks ties within a rank. Targeted
generation puts results satisfying a predicate ahead of everything else.

Every evaluated test (seed included) is archived, and the archive is the
generated suite. Randomness is consumed only while mutating, on the calling
thread, so suites are reproducible whatever the worker count.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml

from .errors import SchemaError, ValidationError
from .geometry import OrientedBox, Pose2D, transform_shape
from .predicates import Predicate
from .scenario import Obstacle, SuiteMember, TestDefinition, TestSuite, write_suite
from .subjects import SubjectSpec
from .testbench import RESULTS_DIR, Category, TestResult, execute_test, map_tests, write_result

log = logging.getLogger(__name__)

SEARCH_TRACE = "search.json"


class MutationKind(str, enum.Enum):
    MOVE_OBSTACLE = "MoveObstacle"
    RESIZE_OBSTACLE = "ResizeObstacle"
    ROTATE_OBSTACLE = "RotateObstacle"
    MOVE_WAYPOINT = "MoveWaypoint"
    NO_OP = "NoOp"


DEFAULT_WEIGHTS = {
    MutationKind.MOVE_OBSTACLE.value: 0.4,
    MutationKind.RESIZE_OBSTACLE.value: 0.25,
    MutationKind.ROTATE_OBSTACLE.value: 0.2,
    MutationKind.MOVE_WAYPOINT.value: 0.15,
}


@dataclass(frozen=True)
class SearchConfig:
    """Search budget, mutation weights and delta ranges.

    ``allow_waypoint_mutation`` overrides the per-test opt-in when not ``None``.
    """
    iterations: int = 21
    offspring: int = 4
    restart_after: int = 5
    rng_seed: int = 0
    allow_waypoint_mutation: Optional[bool] = None
    weights: Tuple[Tuple[str, float], ...] = tuple(DEFAULT_WEIGHTS.items())
    translation: float = 0.5
    scale_min: float = 0.8
    scale_max: float = 1.25
    rotation_deg: float = 30.0
    waypoint_translation: float = 0.5
    max_resample: int = 20

    def validate(self) -> None:
        if self.iterations < 0:
            raise ValidationError(f"iterations must be >= 0, got {self.iterations}")
        if self.offspring < 1:
            raise ValidationError(f"lambda must be >= 1, got {self.offspring}")
        if self.restart_after < 1:
            raise ValidationError(f"restart_after must be >= 1, got {self.restart_after}")
        if self.rng_seed < 0:
            raise ValidationError(f"rng_seed must be >= 0, got {self.rng_seed}")
        if not 0 < self.scale_min <= self.scale_max:
            raise ValidationError(f"scale range must satisfy 0 < min <= max, got [{self.scale_min}, {self.scale_max}]")
        if min(self.translation, self.rotation_deg, self.waypoint_translation) < 0:
            raise ValidationError("mutation ranges must be non-negative")
        kinds = {k.value for k in MutationKind} - {MutationKind.NO_OP.value}
        for name, w in self.weights:
            if name not in kinds:
                raise ValidationError(f"unknown mutation kind {name!r} in weights")
            if w < 0:
                raise ValidationError(f"mutation weight for {name} must be >= 0")

    def weight(self, kind: MutationKind) -> float:
        return dict(self.weights).get(kind.value, 0.0)

    def to_dict(self) -> Dict[str, Any]:
        d = dataclasses.asdict(self)
        d["lambda"] = d.pop("offspring")
        d["weights"] = dict(self.weights)
        return d


_CONFIG_KEYS = {f.name for f in dataclasses.fields(SearchConfig)} - {"offspring"} | {"lambda"}


def search_config_from_dict(doc: Any) -> SearchConfig:
    """Build a :class:`SearchConfig` from a YAML mapping; omitted keys keep defaults."""
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise SchemaError("", "search config must be a mapping")
    unknown = sorted(set(doc) - _CONFIG_KEYS)
    if unknown:
        raise SchemaError(unknown[0], "unknown search config key")
    kwargs: Dict[str, Any] = {}
    for key, value in doc.items():
        name = "offspring" if key == "lambda" else key
        if name == "weights":
            if not isinstance(value, dict):
                raise SchemaError("weights", "expected a mapping of mutation kind to weight")
            merged = {**DEFAULT_WEIGHTS, **{str(k): float(v) for k, v in value.items()}}
            kwargs[name] = tuple(merged.items())
        elif name == "allow_waypoint_mutation":
            kwargs[name] = None if value is None else bool(value)
        elif name in ("iterations", "offspring", "restart_after", "rng_seed", "max_resample"):
            if isinstance(value, bool) or not isinstance(value, int):
                raise SchemaError(key, f"expected an integer, got {value!r}")
            kwargs[name] = value
        else:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise SchemaError(key, f"expected a number, got {value!r}")
            kwargs[name] = float(value)
    cfg = SearchConfig(**kwargs)
    cfg.validate()
    return cfg


def load_search_config(path: Path) -> SearchConfig:
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise SchemaError("", f"{path}: not valid YAML: {e}") from e
    return search_config_from_dict(doc)


# --- mutation -------------------------------------------------------------------

@dataclass(frozen=True)
class Mutation:
    """One applied change. ``target`` is an obstacle id, ``start`` or ``waypoints[i]``."""
    kind: MutationKind
    target: str = ""
    dx: float = 0.0
    dy: float = 0.0
    scale: float = 1.0
    dtheta: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        d: Dict[str, Any] = {"kind": self.kind.value}
        if self.kind is MutationKind.NO_OP:
            return d
        d["target"] = self.target
        if self.kind in (MutationKind.MOVE_OBSTACLE, MutationKind.MOVE_WAYPOINT):
            d.update(dx=self.dx, dy=self.dy)
        elif self.kind is MutationKind.RESIZE_OBSTACLE:
            d["scale"] = self.scale
        else:
            d["dtheta"] = self.dtheta
        return d


NO_OP = Mutation(MutationKind.NO_OP)


def _resize(shape, scale: float):
    if isinstance(shape, OrientedBox):
        return replace(shape, length=shape.length * scale, width=shape.width * scale)
    return replace(shape, diameter=shape.diameter * scale)


def _rotate_in_place(box: OrientedBox, dtheta: float) -> OrientedBox:
    c = box.center
    return replace(box, center=Pose2D(c.x, c.y, c.yaw + dtheta))


def apply_mutation(test: TestDefinition, m: Mutation) -> TestDefinition:
    """Return *test* with *m* applied; the name is left unchanged."""
    if m.kind is MutationKind.NO_OP:
        return test
    if m.kind is MutationKind.MOVE_WAYPOINT:
        mission = test.mission
        if m.target == "start":
            s = mission.start
            mission = replace(mission, start=Pose2D(s.x + m.dx, s.y + m.dy, s.yaw))
        else:
            i = int(m.target[len("waypoints["):-1])
            wps = list(mission.waypoints)
            wps[i] = Pose2D(wps[i].x + m.dx, wps[i].y + m.dy, wps[i].yaw)
            mission = replace(mission, waypoints=tuple(wps))
        return replace(test, mission=mission)

    obstacles = []
    for o in test.obstacles:
        if o.id == m.target:
            if m.kind is MutationKind.MOVE_OBSTACLE:
                o = Obstacle(o.id, transform_shape(o.shape, m.dx, m.dy, 0.0))
            elif m.kind is MutationKind.RESIZE_OBSTACLE:
                o = Obstacle(o.id, _resize(o.shape, m.scale))
            else:
                o = Obstacle(o.id, _rotate_in_place(o.shape, m.dtheta))
        obstacles.append(o)
    return replace(test, obstacles=tuple(obstacles))


def _applicable(test: TestDefinition, config: SearchConfig) -> List[MutationKind]:
    kinds = []
    if test.obstacles:
        kinds += [MutationKind.MOVE_OBSTACLE, MutationKind.RESIZE_OBSTACLE]
        if any(isinstance(o.shape, OrientedBox) for o in test.obstacles):
            kinds.append(MutationKind.ROTATE_OBSTACLE)
    allow = config.allow_waypoint_mutation if config.allow_waypoint_mutation is not None else test.waypoint_mutation
    if allow:
        kinds.append(MutationKind.MOVE_WAYPOINT)
    return [k for k in kinds if config.weight(k) > 0]


def _sample(kind: MutationKind, test: TestDefinition, config: SearchConfig, rng: np.random.Generator) -> Mutation:
    if kind is MutationKind.MOVE_WAYPOINT:
        i = int(rng.integers(len(test.mission.waypoints) + 1))
        dx, dy = (float(v) for v in rng.uniform(-config.waypoint_translation, config.waypoint_translation, size=2))
        return Mutation(kind, "start" if i == 0 else f"waypoints[{i - 1}]", dx=dx, dy=dy)
    pool = test.obstacles
    if kind is MutationKind.ROTATE_OBSTACLE:
        pool = tuple(o for o in test.obstacles if isinstance(o.shape, OrientedBox))
    target = pool[int(rng.integers(len(pool)))].id
    if kind is MutationKind.MOVE_OBSTACLE:
        dx, dy = (float(v) for v in rng.uniform(-config.translation, config.translation, size=2))
        return Mutation(kind, target, dx=dx, dy=dy)
    if kind is MutationKind.RESIZE_OBSTACLE:
        return Mutation(kind, target, scale=float(rng.uniform(config.scale_min, config.scale_max)))
    r = math.radians(config.rotation_deg)
    return Mutation(kind, target, dtheta=float(rng.uniform(-r, r)))


def mutate(test: TestDefinition, config: SearchConfig, rng: np.random.Generator) -> Tuple[TestDefinition, Mutation]:
    """Apply exactly one random valid mutation to *test*.

    Invalid mutants (start or goal inside an obstacle) are resampled up to
    ``config.max_resample`` times; after that *test* comes back unchanged
    with a ``NoOp`` marker.
    """
    kinds = _applicable(test, config)
    if not kinds:
        return test, NO_OP
    weights = np.array([config.weight(k) for k in kinds], dtype=float)
    probs = weights / weights.sum()
    for _ in range(config.max_resample):
        kind = kinds[int(rng.choice(len(kinds), p=probs))]
        m = _sample(kind, test, config, rng)
        try:
            child = apply_mutation(test, m)
        except ValueError:
            continue
        if child.is_valid():
            return child, m
    return test, NO_OP


# --- fitness and selection ------------------------------------------------------

_RANKS = {
    Category.SAFETY_STOP: 0,
    Category.COLLISION: 0,
    Category.SUCCESS: 1,
    Category.TIMEOUT: 1,
    Category.ERROR: 2,
}


@dataclass(frozen=True)
class Fitness:
    """Minimum obstacle distance of the evaluating run (``inf`` without obstacles)."""
    value: float
    outcome: Category

    @property
    def rank(self) -> int:
        return _RANKS[self.outcome]

    @staticmethod
    def of(result: TestResult) -> "Fitness":
        return Fitness(result.metrics.min_obstacle_distance, result.category)


def selection_key(result: TestResult, predicate: Optional[Predicate] = None) -> tuple:
    """Lower is better: predicate match, then outcome rank, then fitness."""
    f = Fitness.of(result)
    if predicate is None:
        return (f.rank, f.value)
    return (0 if predicate(result) else 1, f.rank, f.value)


def evaluate(test: TestDefinition, spec: SubjectSpec, out_dir: Optional[Path] = None) -> Tuple[TestResult, Fitness]:
    """One deterministic simulation of *test* and its fitness."""
    result, _ = execute_test(test, spec, out_dir)
    return result, Fitness.of(result)


@dataclass
class ArchiveEntry:
    member: SuiteMember
    result: TestResult

    @property
    def fitness(self) -> Fitness:
        return Fitness.of(self.result)


@dataclass
class SearchState:
    """Mutable state of one search.

    ``best`` holds the lowest fitness value seen in the archive;
    ``incumbent`` is the test being mutated, chosen by :func:`selection_key`.
    """
    seed: TestDefinition
    rng: np.random.Generator
    incumbent: TestDefinition
    incumbent_key: tuple
    best: Tuple[TestDefinition, Fitness]
    archive: List[ArchiveEntry] = field(default_factory=list)
    iteration: int = 0
    stale_count: int = 0
    history: List[Dict[str, Any]] = field(default_factory=list)


@dataclass
class SearchRun:
    suite: TestSuite
    results: List[TestResult]
    state: SearchState


def _num(v: float) -> Optional[float]:
    return v if math.isfinite(v) else None


def search(
    seed: TestDefinition,
    spec: SubjectSpec,
    config: SearchConfig,
    *,
    predicate: Optional[Predicate] = None,
    workers: int = 1,
    out_dir: Optional[Path] = None,
) -> SearchRun:
    """Run the (1+λ) search and return the archive as a suite plus its results.

    With *out_dir* the suite directory is written there: manifest, member
    definitions, logs, per-test results and ``search.json``.
    """
    config.validate()
    seed.validate()
    rng = np.random.default_rng(config.rng_seed)
    pool_cm = ProcessPoolExecutor(max_workers=workers) if workers > 1 else nullcontext(None)

    with pool_cm as pool:
        def run_batch(tests: List[TestDefinition]) -> List[TestResult]:
            return map_tests(tests, spec, out_dir=out_dir, executor=pool)

        seed_result = run_batch([seed])[0]
        seed_fit = Fitness.of(seed_result)
        state = SearchState(
            seed=seed,
            rng=rng,
            incumbent=seed,
            incumbent_key=selection_key(seed_result, predicate),
            best=(seed, seed_fit),
            archive=[ArchiveEntry(SuiteMember(seed.name, f"tests/{seed.name}.yaml", test=seed), seed_result)],
        )
        log.info("%s: seed %s fitness %s", seed.name, seed_result.category.value, _num(seed_fit.value))

        for it in range(1, config.iterations + 1):
            state.iteration = it
            parent = state.incumbent
            children: List[Tuple[TestDefinition, Mutation]] = []
            for c in range(config.offspring):
                child, m = mutate(parent, config, rng)
                children.append((replace(child, name=f"{seed.name}-i{it:03d}-c{c}"), m))
            results = run_batch([t for t, _ in children])

            for (child, m), r in zip(children, results):
                member = SuiteMember(
                    child.name,
                    f"tests/{child.name}.yaml",
                    test=child,
                    parent=parent.name,
                    iteration=it,
                    mutation=m.to_dict(),
                )
                state.archive.append(ArchiveEntry(member, r))
                fit = Fitness.of(r)
                if fit.value < state.best[1].value:
                    state.best = (child, fit)

            keys = [selection_key(r, predicate) for r in results]
            winner = min(range(len(keys)), key=lambda i: keys[i])
            improved = keys[winner] < state.incumbent_key
            if improved:
                state.incumbent, state.incumbent_key = children[winner][0], keys[winner]
                state.stale_count = 0
            else:
                state.stale_count += 1
            restarted = state.stale_count >= config.restart_after
            state.history.append(
                {
                    "iteration": it,
                    "incumbent": state.incumbent.name,
                    "incumbent_fitness": _num(state.incumbent_key[-1]),
                    "improved": improved,
                    "best": state.best[0].name,
                    "best_fitness": _num(state.best[1].value),
                    "restart": restarted,
                }
            )
            log.info(
                "%s: iteration %d/%d incumbent %s (%s) best %s",
                seed.name, it, config.iterations, state.incumbent.name,
                _num(state.incumbent_key[-1]), _num(state.best[1].value),
            )
            if restarted:
                state.incumbent, state.incumbent_key = seed, selection_key(seed_result, predicate)
                state.stale_count = 0

    suite = TestSuite(
        name=seed.name,
        members=[e.member for e in state.archive],
        seed=seed.name,
        subject_id=spec.subject_id,
        config={**config.to_dict(), "target": str(predicate) if predicate is not None else None},
    )
    run = SearchRun(suite, [e.result for e in state.archive], state)
    if out_dir is not None:
        write_search(run, out_dir)
    return run


def write_search(run: SearchRun, out_dir: Path) -> Path:
    """Write the suite, per-test results and ``search.json`` under *out_dir*."""
    out_dir = Path(out_dir)
    manifest = write_suite(run.suite, out_dir)
    for r in run.results:
        write_result(r, out_dir / RESULTS_DIR / f"{r.test_name}.json")
    st = run.state
    trace = {
        "seed": st.seed.name,
        "subject": run.suite.subject_id,
        "evaluations": len(st.archive),
        "best": {"test": st.best[0].name, "fitness": _num(st.best[1].value), "category": st.best[1].outcome.value},
        "history": st.history,
        "rng_state": st.rng.bit_generator.state,
    }
    (out_dir / SEARCH_TRACE).write_text(json.dumps(trace, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def generate_suite(
    seed: TestDefinition,
    spec: SubjectSpec,
    config: SearchConfig,
    *,
    workers: int = 1,
    out_dir: Optional[Path] = None,
) -> TestSuite:
    """Evolve *seed* against the subject; the returned suite is the whole archive."""
    return search(seed, spec, config, workers=workers, out_dir=out_dir).suite


def targeted_generate(
    seed: TestDefinition,
    spec: SubjectSpec,
    predicate: Predicate,
    config: SearchConfig,
    *,
    workers: int = 1,
    out_dir: Optional[Path] = None,
) -> TestSuite:
    """Like :func:`generate_suite`, preferring results that satisfy *predicate*."""
    return search(seed, spec, config, predicate=predicate, workers=workers, out_dir=out_dir).suite

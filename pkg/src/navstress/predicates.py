"""Result predicates for targeted generation.

A predicate is a comma-separated conjunction of clauses::

    category=SafetyStop,min_gap<1.5
    SafetyStop                      # bare category name
    category!=Success,distance<=0.1

Metric names are the :class:`~navstress.testbench.TestMetrics` fields plus the
aliases ``distance``, ``gap`` and ``min_gap``. Undefined (infinite) metric
values compare as infinity.
"""

from __future__ import annotations

import operator
import re
from dataclasses import dataclass
from typing import Callable, Tuple

from .errors import ValidationError
from .testbench import CATEGORIES, Category, TestResult

_OPS = {
    "<=": operator.le,
    ">=": operator.ge,
    "!=": operator.ne,
    "<": operator.lt,
    ">": operator.gt,
    "=": operator.eq,
}
_ALIASES = {
    "distance": "min_obstacle_distance",
    "gap": "min_obstacle_gap",
    "min_gap": "min_obstacle_gap",
}
_METRICS = ("min_obstacle_distance", "min_obstacle_gap", "path_length", "deviation", "duration")
_CLAUSE = re.compile(r"^\s*([A-Za-z_]+)\s*(<=|>=|!=|<|>|=)\s*(\S+)\s*$")


@dataclass(frozen=True)
class Clause:
    field: str
    op: str
    value: object

    def __call__(self, result: TestResult) -> bool:
        fn: Callable = _OPS[self.op]
        if self.field == "category":
            return fn(result.category, self.value)
        return fn(getattr(result.metrics, self.field), self.value)


@dataclass(frozen=True)
class Predicate:
    """Conjunction of clauses; the empty predicate is always true."""
    text: str
    clauses: Tuple[Clause, ...]

    def __call__(self, result: TestResult) -> bool:
        return all(c(result) for c in self.clauses)

    def __str__(self) -> str:
        return self.text


def _category(raw: str) -> Category:
    for c in CATEGORIES:
        if c.value.lower() == raw.lower():
            return c
    raise ValidationError(f"unknown category {raw!r}; expected one of {', '.join(c.value for c in CATEGORIES)}")


def parse_predicate(text: str) -> Predicate:
    """Parse *text* into a :class:`Predicate`.

    Raises:
        ValidationError: Unknown field, category or operator, or a
            non-numeric metric bound.
    """
    clauses = []
    for part in (p for p in text.split(",") if p.strip()):
        m = _CLAUSE.match(part)
        if m is None:
            clauses.append(Clause("category", "=", _category(part.strip())))
            continue
        name, op, raw = m.groups()
        if name == "category":
            if op not in ("=", "!="):
                raise ValidationError(f"category supports only = and !=, got {op!r}")
            clauses.append(Clause("category", op, _category(raw)))
            continue
        name = _ALIASES.get(name, name)
        if name not in _METRICS:
            raise ValidationError(f"unknown predicate field {m.group(1)!r}")
        try:
            value = float(raw)
        except ValueError:
            raise ValidationError(f"{m.group(1)}: expected a number, got {raw!r}")
        clauses.append(Clause(name, op, value))
    return Predicate(text.strip(), tuple(clauses))

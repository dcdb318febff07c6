"""Suite reports: aggregation, comparison and output formatters (text and JSON).

Percentages are computed over *all* results, ``Error`` included, so they
always sum to 100. Metric statistics skip ``Error`` results and infinite
values (no obstacles, fewer than two obstacles).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .errors import EmptyResults, SuiteFormatError, SuiteMismatch
from .testbench import CATEGORIES, Category, TestResult

REPORT_SCHEMA = 1
METRICS = ("min_obstacle_distance", "min_obstacle_gap", "path_length", "deviation", "duration")
OVERALL = "overall"


@dataclass
class MetricStats:
    """Descriptive statistics of one metric; all ``None`` when no finite value exists."""
    count: int = 0
    min: Optional[float] = None
    max: Optional[float] = None
    mean: Optional[float] = None


@dataclass
class FamilyRow:
    """Category counts and percentages for one scenario family (or overall)."""
    family: str
    total: int
    counts: Dict[str, int]
    percentages: Dict[str, float]

    def pct(self, category: Category) -> float:
        return self.percentages[category.value]


@dataclass
class SuiteReport:
    """Top-level report: overall row, per-family rows, metric statistics and members."""
    suite: str
    subject_id: str
    overall: FamilyRow
    families: List[FamilyRow]
    metrics: Dict[str, MetricStats]
    members: List[str] = field(default_factory=list)
    schema: int = REPORT_SCHEMA

    def family(self, name: str) -> FamilyRow:
        if name == OVERALL:
            return self.overall
        for row in self.families:
            if row.family == name:
                return row
        raise KeyError(name)


def _row(family: str, results: Sequence[TestResult]) -> FamilyRow:
    n = len(results)
    counts = {c.value: 0 for c in CATEGORIES}
    for r in results:
        counts[r.category.value] += 1
    return FamilyRow(family, n, counts, {k: 100.0 * v / n for k, v in counts.items()})


def _stats(values: List[float]) -> MetricStats:
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return MetricStats()
    lo, hi = min(finite), max(finite)
    mean = math.fsum(finite) / len(finite)
    return MetricStats(len(finite), lo, hi, min(max(mean, lo), hi))


def aggregate(results: Sequence[TestResult], suite: str = "", subject_id: Optional[str] = None) -> SuiteReport:
    """Summarise *results* overall and per scenario family.

    Raises:
        EmptyResults: *results* is empty.
    """
    if not results:
        raise EmptyResults("cannot aggregate zero results")
    by_family: Dict[str, List[TestResult]] = {}
    for r in results:
        by_family.setdefault(r.family, []).append(r)
    measured = [r for r in results if r.category is not Category.ERROR]
    return SuiteReport(
        suite=suite,
        subject_id=subject_id if subject_id is not None else results[0].subject_id,
        overall=_row(OVERALL, results),
        families=[_row(f, by_family[f]) for f in sorted(by_family)],
        metrics={m: _stats([getattr(r.metrics, m) for r in measured]) for m in METRICS},
        members=[r.test_name for r in results],
    )


# --- comparison -----------------------------------------------------------------

@dataclass
class ComparisonRow:
    family: str
    success_a: float
    success_b: float
    safety_stop_a: float
    safety_stop_b: float

    @property
    def success_delta(self) -> float:
        return self.success_b - self.success_a

    @property
    def safety_stop_delta(self) -> float:
        return self.safety_stop_b - self.safety_stop_a


@dataclass
class Comparison:
    """Per-family Success and SafetyStop deltas of report *b* against report *a*."""
    suite: str
    subject_a: str
    subject_b: str
    rows: List[ComparisonRow]

    def row(self, family: str) -> ComparisonRow:
        for r in self.rows:
            if r.family == family:
                return r
        raise KeyError(family)


def compare_reports(a: SuiteReport, b: SuiteReport) -> Comparison:
    """Compare two reports over the same member tests.

    Raises:
        SuiteMismatch: The member test lists differ.
    """
    if sorted(a.members) != sorted(b.members):
        only_a = sorted(set(a.members) - set(b.members))
        only_b = sorted(set(b.members) - set(a.members))
        raise SuiteMismatch(
            f"reports cover different tests ({len(a.members)} vs {len(b.members)}); "
            f"only in A: {only_a[:5]}, only in B: {only_b[:5]}"
        )
    rows = []
    for ra in [*a.families, a.overall]:
        rb = b.family(ra.family)
        rows.append(
            ComparisonRow(
                ra.family,
                ra.pct(Category.SUCCESS),
                rb.pct(Category.SUCCESS),
                ra.pct(Category.SAFETY_STOP),
                rb.pct(Category.SAFETY_STOP),
            )
        )
    return Comparison(a.suite, a.subject_id, b.subject_id, rows)


# --- formatters -----------------------------------------------------------------

def format_report(report: SuiteReport) -> str:
    """Human-readable report: category table per family, then metric statistics."""
    cols = [c.value for c in CATEGORIES]
    width = max([len(OVERALL)] + [len(r.family) for r in report.families])
    lines = [
        f"=== Suite {report.suite or '-'} | subject {report.subject_id} | {report.overall.total} tests ===",
        "",
        f"{'family':<{width}}  {'n':>4}  " + "  ".join(f"{c:>10}" for c in cols),
    ]
    for row in [*report.families, report.overall]:
        cells = "  ".join(f"{row.percentages[c]:>9.1f}%" for c in cols)
        lines.append(f"{row.family:<{width}}  {row.total:>4}  {cells}")
    lines += ["", f"{'metric':<22} {'n':>4} {'min':>9} {'mean':>9} {'max':>9}"]
    for name, st in report.metrics.items():
        if st.count == 0:
            lines.append(f"{name:<22} {0:>4} {'-':>9} {'-':>9} {'-':>9}")
        else:
            lines.append(f"{name:<22} {st.count:>4} {st.min:>9.3f} {st.mean:>9.3f} {st.max:>9.3f}")
    return "\n".join(lines)


def format_table(reports: Sequence[SuiteReport], labels: Optional[Sequence[str]] = None) -> str:
    """One row per report with ``Succ.`` and ``S-Stop`` per family plus overall."""
    labels = list(labels) if labels is not None else [f"{r.subject_id} on {r.suite or '-'}" for r in reports]
    families = sorted({row.family for r in reports for row in r.families}) + [OVERALL]
    lw = max(len(s) for s in ["suite / subject", *labels])
    head = f"{'suite / subject':<{lw}}" + "".join(f"  {f[:15]:^15}" for f in families)
    sub = " " * lw + "".join(f"  {'Succ.':>7}{'S-Stop':>8}" for _ in families)
    lines = [head, sub]
    for label, rep in zip(labels, reports):
        cells = []
        for f in families:
            try:
                row = rep.family(f)
            except KeyError:
                cells.append(f"  {'-':>7}{'-':>8}")
                continue
            cells.append(f"  {row.pct(Category.SUCCESS):>6.1f}%{row.pct(Category.SAFETY_STOP):>7.1f}%")
        lines.append(f"{label:<{lw}}" + "".join(cells))
    return "\n".join(lines)


def format_comparison(cmp: Comparison) -> str:
    lines = [
        f"=== {cmp.subject_b} vs {cmp.subject_a} on {cmp.suite or '-'} ===",
        f"{'family':<16} {'Succ. A':>8} {'Succ. B':>8} {'delta':>7}   {'S-Stop A':>8} {'S-Stop B':>8} {'delta':>7}",
    ]
    for r in cmp.rows:
        lines.append(
            f"{r.family:<16} {r.success_a:>7.1f}% {r.success_b:>7.1f}% {r.success_delta:>+7.1f}   "
            f"{r.safety_stop_a:>7.1f}% {r.safety_stop_b:>7.1f}% {r.safety_stop_delta:>+7.1f}"
        )
    return "\n".join(lines)


def report_to_json(report: SuiteReport) -> str:
    """Serialize the full report to a pretty-printed, key-sorted JSON string."""
    return json.dumps(asdict(report), indent=2, sort_keys=True) + "\n"


def comparison_to_json(cmp: Comparison) -> str:
    doc = asdict(cmp)
    for row, r in zip(doc["rows"], cmp.rows):
        row["success_delta"] = r.success_delta
        row["safety_stop_delta"] = r.safety_stop_delta
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _row_from_dict(d: dict) -> FamilyRow:
    return FamilyRow(d["family"], int(d["total"]), dict(d["counts"]), {k: float(v) for k, v in d["percentages"].items()})


def report_from_json(text: str) -> SuiteReport:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise SuiteFormatError(f"report is not JSON: {e}") from e
    if not isinstance(d, dict) or d.get("schema") != REPORT_SCHEMA:
        raise SuiteFormatError(f"report schema {d.get('schema') if isinstance(d, dict) else None!r} is not supported (expected {REPORT_SCHEMA})")
    try:
        return _report_from_dict(d)
    except (KeyError, TypeError, ValueError) as e:
        raise SuiteFormatError(f"bad report: {e}") from e


def _report_from_dict(d: dict) -> SuiteReport:
    return SuiteReport(
        suite=d["suite"],
        subject_id=d["subject_id"],
        overall=_row_from_dict(d["overall"]),
        families=[_row_from_dict(r) for r in d["families"]],
        metrics={k: MetricStats(**v) for k, v in d["metrics"].items()},
        members=list(d["members"]),
    )


def read_report(path: Path) -> SuiteReport:
    return report_from_json(path.read_text(encoding="utf-8"))


def write_report(report: SuiteReport, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report_to_json(report), encoding="utf-8")
    return path

"""Tests for navstress.report: aggregation, comparison and formatters.

Validates category percentages per family and overall, metric statistics,
report comparison deltas, the per-family comparison table and the JSON
round trip. Report invariants are also checked as hypothesis properties over
randomized result sets.
"""

import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from navstress.errors import EmptyResults, SuiteFormatError, SuiteMismatch
from navstress.report import (
    METRICS,
    OVERALL,
    FamilyRow,
    MetricStats,
    SuiteReport,
    aggregate,
    compare_reports,
    comparison_to_json,
    format_comparison,
    format_report,
    format_table,
    read_report,
    report_from_json,
    report_to_json,
    write_report,
)
from navstress.testbench import CATEGORIES, Category, TestMetrics, TestOutcome, TestResult, error_result


def _result(name, category=Category.SUCCESS, distance=0.5, gap=math.inf, path=10.0, deviation=0.1, duration=20.0):
    """Helper: a TestResult with configurable category and metrics."""
    return TestResult(
        name, "refnav_a", TestOutcome(category), TestMetrics(distance, gap, path, deviation, duration)
    )


def _row(family, success, safety_stop):
    """Helper: a FamilyRow with the given Success and SafetyStop percentages."""
    pct = {c.value: 0.0 for c in CATEGORIES}
    pct["Success"], pct["SafetyStop"] = success, safety_stop
    pct["Timeout"] = 100.0 - success - safety_stop
    return FamilyRow(family, 100, {}, pct)


def _two_row_report(subject, overall, per_family):
    return SuiteReport(
        suite="TS-A",
        subject_id=subject,
        overall=_row(OVERALL, *overall),
        families=[_row(f, *v) for f, v in per_family.items()],
        metrics={},
        members=["m1", "m2"],
    )


# ---------------------------------------------------------------------------
# aggregate
# ---------------------------------------------------------------------------
class TestAggregate:
    """Verify percentages, family rows and metric statistics."""

    def test_three_way_split(self):
        rep = aggregate([
            _result("boxes1", Category.SUCCESS),
            _result("boxes1-i001-c0", Category.SAFETY_STOP),
            _result("boxes1-i001-c1", Category.TIMEOUT),
        ])
        for c in (Category.SUCCESS, Category.SAFETY_STOP, Category.TIMEOUT):
            assert rep.overall.pct(c) == pytest.approx(33.3, abs=0.1)
        assert rep.overall.pct(Category.ERROR) == 0.0

    def test_all_success(self):
        rep = aggregate([_result(f"corridor-i00{i}-c0") for i in range(4)])
        assert rep.overall.pct(Category.SUCCESS) == 100.0
        assert all(rep.overall.pct(c) == 0.0 for c in CATEGORIES if c is not Category.SUCCESS)

    def test_empty(self):
        with pytest.raises(EmptyResults):
            aggregate([])

    def test_family_rows_sorted(self):
        rep = aggregate([
            _result("l_corridor-i001-c0"),
            _result("boxes1", Category.SAFETY_STOP),
            _result("boxes1-i001-c0"),
        ])
        assert [r.family for r in rep.families] == ["boxes1", "l_corridor"]
        assert rep.family("boxes1").pct(Category.SUCCESS) == 50.0
        assert rep.family("l_corridor").total == 1
        assert rep.family(OVERALL) is rep.overall
        with pytest.raises(KeyError):
            rep.family("forest")

    def test_errors_in_denominator_not_in_metrics(self):
        rep = aggregate([
            _result("boxes1", distance=0.4),
            _result("boxes1-i001-c0", distance=0.2),
            error_result("boxes1-i001-c1", "refnav_a", "crashed"),
        ])
        assert rep.overall.pct(Category.ERROR) == pytest.approx(100 / 3)
        st_ = rep.metrics["min_obstacle_distance"]
        assert (st_.count, st_.min, st_.max, st_.mean) == (2, 0.2, 0.4, pytest.approx(0.3))

    def test_undefined_metrics_skipped(self):
        rep = aggregate([_result("a"), _result("b")])
        assert rep.metrics["min_obstacle_gap"] == MetricStats()

    def test_members_and_subject(self):
        rep = aggregate([_result("x"), _result("y")], suite="s")
        assert rep.members == ["x", "y"]
        assert rep.subject_id == "refnav_a"
        assert rep.suite == "s"


_categories = st.sampled_from(CATEGORIES)
_dist = st.one_of(st.just(math.inf), st.floats(0.0, 50.0))
_families = st.sampled_from(["boxes1", "boxes2", "corridor", "cylinders", "l_corridor"])


@st.composite
def result_sets(draw):
    n = draw(st.integers(1, 40))
    out = []
    for i in range(n):
        out.append(_result(
            f"{draw(_families)}-i{i:03d}-c0",
            draw(_categories),
            draw(_dist),
            draw(_dist),
            draw(st.floats(0.0, 100.0)),
            draw(st.floats(0.0, 10.0)),
            draw(st.floats(0.0, 200.0)),
        ))
    return out


class TestReportInvariants:
    @given(result_sets())
    def test_percentages_sum_to_100(self, results):
        rep = aggregate(results)
        for row in [*rep.families, rep.overall]:
            assert sum(row.percentages.values()) == pytest.approx(100.0, abs=0.1)
            assert sum(row.counts.values()) == row.total

    @given(result_sets())
    def test_min_mean_max_ordered(self, results):
        rep = aggregate(results)
        for name in METRICS:
            s = rep.metrics[name]
            if s.count:
                assert s.min <= s.mean <= s.max

    @given(result_sets())
    def test_json_round_trip(self, results):
        rep = aggregate(results, suite="prop")
        assert report_from_json(report_to_json(rep)) == rep


# ---------------------------------------------------------------------------
# compare_reports
# ---------------------------------------------------------------------------
class TestCompareReports:
    """Verify deltas, mismatch detection and the comparison outputs."""

    def test_overall_deltas(self):
        """Success 40.3 -> 71.2 and SafetyStop 42.2 -> 7.7 overall."""
        a = _two_row_report("A", (40.3, 42.2), {"boxes1": (30.0, 50.0)})
        b = _two_row_report("B", (71.2, 7.7), {"boxes1": (60.0, 20.0)})
        cmp = compare_reports(a, b)
        row = cmp.row(OVERALL)
        assert row.success_delta == pytest.approx(30.9)
        assert row.safety_stop_delta == pytest.approx(-34.5)
        assert [r.family for r in cmp.rows] == ["boxes1", OVERALL]

    def test_identical_reports_zero_delta(self):
        rep = aggregate([_result("boxes1"), _result("corridor", Category.SAFETY_STOP)])
        cmp = compare_reports(rep, rep)
        assert all(r.success_delta == 0.0 and r.safety_stop_delta == 0.0 for r in cmp.rows)

    def test_member_order_ignored(self):
        a = aggregate([_result("x"), _result("y")])
        b = aggregate([_result("y"), _result("x", Category.TIMEOUT)])
        assert compare_reports(a, b).row("x").success_delta == -100.0

    def test_mismatch(self):
        a = aggregate([_result("x"), _result("y")])
        b = aggregate([_result("x"), _result("z")])
        with pytest.raises(SuiteMismatch, match="only in A"):
            compare_reports(a, b)

    def test_outputs(self):
        a = _two_row_report("refnav_a", (40.3, 42.2), {"boxes1": (30.0, 50.0)})
        b = _two_row_report("refnav_b", (71.2, 7.7), {"boxes1": (60.0, 20.0)})
        cmp = compare_reports(a, b)
        text = format_comparison(cmp)
        assert "refnav_b vs refnav_a" in text
        assert "+30.9" in text and "-34.5" in text
        doc = json.loads(comparison_to_json(cmp))
        assert doc["rows"][-1]["success_delta"] == pytest.approx(30.9)


# ---------------------------------------------------------------------------
# formatters / persistence
# ---------------------------------------------------------------------------
class TestFormatters:
    def test_format_report_sections(self):
        rep = aggregate([_result("boxes1"), _result("corridor", Category.SAFETY_STOP)], suite="demo")
        text = format_report(rep)
        assert "Suite demo" in text
        assert "SafetyStop" in text
        assert "min_obstacle_gap" in text
        assert text.splitlines()[-5].startswith("min_obstacle_distance")

    def test_table_layout(self):
        """One Succ./S-Stop column pair per family plus overall."""
        a = aggregate([_result("boxes1"), _result("corridor", Category.SAFETY_STOP)], suite="TS-A")
        b = aggregate([_result("boxes1"), _result("corridor")], suite="TS-A", subject_id="refnav_b")
        lines = format_table([a, b], ["refnav_a on TS-A", "refnav_b on TS-A"]).splitlines()
        assert "boxes1" in lines[0] and "corridor" in lines[0] and OVERALL in lines[0]
        assert lines[1].count("Succ.") == 3
        assert lines[2].startswith("refnav_a on TS-A")
        assert "50.0%" in lines[2]
        assert lines[3].count("100.0%") == 3

    def test_table_missing_family(self):
        a = aggregate([_result("boxes1")], suite="x")
        b = aggregate([_result("corridor")], suite="y")
        assert "-" in format_table([a, b]).splitlines()[2]

    def test_json_is_stable(self):
        rep = aggregate([_result("boxes1"), _result("corridor")])
        assert report_to_json(rep) == report_to_json(report_from_json(report_to_json(rep)))

    def test_write_read(self, tmp_path):
        rep = aggregate([_result("boxes1")], suite="s")
        assert read_report(write_report(rep, tmp_path / "r" / "report.json")) == rep

    def test_bad_json(self):
        with pytest.raises(SuiteFormatError):
            report_from_json("{")
        with pytest.raises(SuiteFormatError, match="schema"):
            report_from_json(json.dumps({"schema": 9}))
        with pytest.raises(SuiteFormatError):
            report_from_json(json.dumps({"schema": 1, "suite": "x"}))

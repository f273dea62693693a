from __future__ import annotations

import csv
import io
import math

import pytest
from hypothesis import given, strategies as st

from cuckoohh import accuracy, perf_result, relative_improvement
from cuckoohh.metrics import CSV_COLUMNS, improvement_rows, rows_to_csv

counts = st.dictionaries(st.integers(0, 1000), st.integers(1, 10_000), max_size=30)


def test_exact_report_is_perfect():
    r = accuracy({1: 10, 2: 20}, {1: 10, 2: 20})
    assert (r.precision, r.recall, r.are) == (1.0, 1.0, 0.0)


def test_partial_report():
    r = accuracy({"a": 100, "b": 50}, {"a": 90})
    assert r.precision == 1.0
    assert r.recall == 0.5
    assert r.are == pytest.approx(0.55)


def test_one_false_positive():
    true = {1: 10, 2: 20, 3: 30}
    r = accuracy(true, {**true, 4: 5})
    assert r.precision == pytest.approx(3 / 4)
    assert r.recall == 1.0 and r.are == 0.0


def test_empty_sets():
    both = accuracy({}, {})
    assert (both.precision, both.recall, both.are, both.degenerate) == (1.0, 1.0, 0.0, True)
    none_reported = accuracy({1: 5}, {})
    assert none_reported.precision == 0.0 and none_reported.recall == 0.0
    assert none_reported.are == 1.0
    no_truth = accuracy({}, {1: 5})
    assert no_truth.precision == 0.0 and no_truth.degenerate


@given(true=counts, reported=counts)
def test_accuracy_ranges(true, reported):
    r = accuracy(true, reported)
    assert 0.0 <= r.precision <= 1.0
    assert 0.0 <= r.recall <= 1.0
    assert r.are >= 0.0
    assert (r.true_hh_count, r.reported_hh_count) == (len(true), len(reported))


@given(true=counts, reported=counts)
def test_are_invariant_under_duplication(true, reported):
    def twice(d):
        return {**{(0, k): v for k, v in d.items()}, **{(1, k): v for k, v in d.items()}}

    assert accuracy(twice(true), twice(reported)).are == pytest.approx(accuracy(true, reported).are)


@given(true=counts)
def test_oracle_against_itself_is_perfect(true):
    r = accuracy(true, dict(true))
    assert (r.precision, r.recall, r.are) == (1.0, 1.0, 0.0)


def test_perf_result():
    p = perf_result(1000, 0.5, [1e-6, 2e-6, 3e-6])
    assert p.throughput == 2000
    assert p.hh_latency_mean_us == pytest.approx(2.0)
    assert p.hh_latency_p99_us == pytest.approx(2.98)
    assert math.isnan(perf_result(10, 1.0).hh_latency_mean_us)


def test_identical_series_give_unit_ratios():
    t = relative_improvement({"a": [1.0, 2.0], "b": [1.0, 2.0]})
    assert all(r == 1.0 for row in t.rows for r in row.ratios)


def test_relative_improvement_ranking():
    t = relative_improvement({"B": [1, 2], "A": [2, 4]})
    assert t.ranking() == ["A", "B"]
    assert t.rows[0].ratios == (2.0, 2.0) and t.rows[0].mean_ratio == 2.0
    assert t.rows[1].ratios == (1.0, 1.0)


def test_lower_is_better_and_zero_exclusion():
    t = relative_improvement({"a": [0.1, 0.0], "b": [0.2, 0.4]}, higher_is_better=False)
    assert t.excluded_points == (1,)
    assert t.ranking() == ["a", "b"]
    assert t.rows[0].ratios == (2.0,)
    t = relative_improvement({"a": [0.0, 1.0], "b": [1.0, 2.0]})
    assert t.excluded_points == (0,)


def test_relative_improvement_needs_two_aligned_series():
    with pytest.raises(ValueError):
        relative_improvement({"a": [1.0]})
    with pytest.raises(ValueError):
        relative_improvement({"a": [1.0], "b": [1.0, 2.0]})


def test_improvement_rows_layout():
    rows = improvement_rows("recall", [1024, 4096], {"chk": [0.5, 1.0], "ss": [0.25, 0.5]})
    assert rows == [
        ("recall", 1024, "chk", 2.0), ("recall", 4096, "chk", 2.0),
        ("recall", 1024, "ss", 1.0), ("recall", 4096, "ss", 1.0),
    ]


def test_csv_schema():
    text = rows_to_csv([{"run_id": 0, "algo": "chk", "metric": "recall", "value": 0.1}])
    parsed = list(csv.reader(io.StringIO(text)))
    assert tuple(parsed[0]) == CSV_COLUMNS
    assert parsed[1][CSV_COLUMNS.index("value")] == "0.1"
    assert rows_to_csv([], header=False) == ""

"""Accuracy and performance metrics, plus the CSV row format of the harness."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

CSV_COLUMNS = (
    "run_id", "algo", "variant", "threads", "phi", "memory_bytes",
    "skew", "query_rate", "metric", "value",
)


@dataclass(frozen=True)
class AccuracyResult:
    precision: float
    recall: float
    are: float
    true_hh_count: int
    reported_hh_count: int
    degenerate: bool = False


def accuracy(true_hh: Mapping[int, int], reported: Mapping[int, int]) -> AccuracyResult:
    """Precision, recall and ARE of ``reported`` against the true heavy hitters.

    ARE averages ``|f - f_hat| / f`` over the true set, with ``f_hat = 0``
    for true heavy hitters that were not reported. An empty true set gives
    ARE 0 and sets ``degenerate``; an empty report against a non-empty true
    set has precision 0.
    """
    hits = sum(1 for e in reported if e in true_hh)
    n_true, n_rep = len(true_hh), len(reported)
    if n_rep:
        precision = hits / n_rep
    else:
        precision = 1.0 if n_true == 0 else 0.0
    recall = hits / n_true if n_true else 1.0
    if n_true:
        are = sum(abs(f - reported.get(e, 0)) / f for e, f in true_hh.items()) / n_true
    else:
        are = 0.0
    return AccuracyResult(precision, recall, are, n_true, n_rep, degenerate=n_true == 0)


@dataclass(frozen=True)
class PerfResult:
    throughput: float  # operations per second
    hh_latency_mean_us: float
    hh_latency_p99_us: float
    runs: int = 1


def perf_result(ops: int, elapsed_s: float, latencies_s: Sequence[float] = (), runs: int = 1) -> PerfResult:
    lat = np.asarray(latencies_s, dtype=np.float64) * 1e6
    if lat.size:
        mean, p99 = float(lat.mean()), float(np.percentile(lat, 99))
    else:
        mean = p99 = math.nan
    throughput = ops / elapsed_s if elapsed_s > 0 else math.nan
    return PerfResult(throughput, mean, p99, runs)


@dataclass(frozen=True)
class ImprovementRow:
    algo: str
    mean_ratio: float
    ratios: tuple[float, ...]


@dataclass(frozen=True)
class ImprovementTable:
    rows: tuple[ImprovementRow, ...]
    excluded_points: tuple[int, ...]

    def ranking(self) -> list[str]:
        return [r.algo for r in self.rows]


def relative_improvement(
    series: Mapping[str, Sequence[float]], higher_is_better: bool = True
) -> ImprovementTable:
    """Normalise each configuration point by the worst algorithm there.

    For higher-is-better metrics the ratio is ``value / worst``; otherwise
    ``worst / value``. Points where the worst value (or, for lower-is-better
    metrics, any value) is zero are excluded and listed in
    ``excluded_points``. Rows are sorted by mean ratio, best first.
    """
    if len(series) < 2:
        raise ValueError("relative improvement needs at least two algorithms")
    lengths = {len(v) for v in series.values()}
    if len(lengths) != 1:
        raise ValueError("all series must cover the same configuration points")
    n_points = lengths.pop()
    names = list(series)
    values = np.array([series[a] for a in names], dtype=np.float64)

    ratios: dict[str, list[float]] = {a: [] for a in names}
    excluded = []
    for j in range(n_points):
        col = values[:, j]
        if higher_is_better:
            worst = col.min()
            if worst == 0:
                excluded.append(j)
                continue
            point = col / worst
        else:
            worst = col.max()
            if worst == 0 or (col == 0).any():
                excluded.append(j)
                continue
            point = worst / col
        for a, r in zip(names, point.tolist()):
            ratios[a].append(r)

    rows = [
        ImprovementRow(a, float(np.mean(ratios[a])) if ratios[a] else math.nan, tuple(ratios[a]))
        for a in names
    ]
    rows.sort(key=lambda r: (-r.mean_ratio if not math.isnan(r.mean_ratio) else math.inf, r.algo))
    return ImprovementTable(tuple(rows), tuple(excluded))


def format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: Iterable[Mapping], header: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([format_value(row.get(c, "")) for c in CSV_COLUMNS])
    return buf.getvalue()


def improvement_rows(metric: str, x_values: Sequence, series: Mapping[str, Sequence[float]],
                     higher_is_better: bool = True) -> list[tuple]:
    """``(metric, x, algo, ratio)`` rows for plotting relative-improvement panels."""
    table = relative_improvement(series, higher_is_better)
    kept = [x for j, x in enumerate(x_values) if j not in table.excluded_points]
    out = []
    for row in table.rows:
        for x, r in zip(kept, row.ratios):
            out.append((metric, x, row.algo, r))
    return out

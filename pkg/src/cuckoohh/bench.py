"""Experiment harness shared by the CLI and the acceptance tests.

Every run ``r`` of a configuration uses seed ``seed + r`` for both the
synthetic stream and the sketch, so accuracy rows are reproducible.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .baselines import CountMinSketch, ExactOracle, SpaceSaving
from .base import HeavyHitterSketch
from .chk import CuckooHeavyKeeper
from .metrics import AccuracyResult, PerfResult, accuracy, perf_result, rows_to_csv
from .parallel import ParallelHeavyHitters
from .streamgen import ZipfSpec, gen_zipf, read_stream

ALGOS = ("chk", "spacesaving", "countmin", "oracle")
COMMANDS = ("generate", "accuracy", "bench-seq", "bench-par")


@dataclass(frozen=True)
class RunSpec:
    command: str = "accuracy"
    algo: str = "chk"
    variant: str | None = None
    phi: float = 0.0005
    memory_bytes: int = 4096
    skew: float = 1.2
    count_n: int = 1_000_000
    universe: int = 100_000
    threads: int = 1
    query_rate: float = 0.0
    repeats: int = 30
    seed: int = 0
    input: str | None = None
    output: str | None = None
    max_buf: int = 16
    max_w: int = 1000
    warmup: float = 0.01

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.algo not in ALGOS:
            raise ValueError(f"unknown algo {self.algo!r}; choose from {ALGOS}")
        if self.variant is not None and self.command != "bench-par":
            raise ValueError("--variant only applies to bench-par")
        if self.command == "bench-par":
            if self.variant not in ("I", "Q"):
                raise ValueError("bench-par needs --variant I or Q")
            if self.algo == "oracle":
                raise ValueError("the oracle cannot be wrapped by the parallel framework")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if not 0.0 <= self.query_rate < 1.0:
            raise ValueError("query_rate must lie in [0, 1)")
        if not 0.0 <= self.warmup < 1.0:
            raise ValueError("warmup must lie in [0, 1)")

    def zipf(self, run: int) -> ZipfSpec:
        return ZipfSpec(self.universe, self.skew, self.count_n, self.seed + run)


def make_sketch(algo: str, phi: float, memory_bytes: int, seed: int) -> HeavyHitterSketch:
    if algo == "chk":
        return CuckooHeavyKeeper(phi=phi, memory_budget=memory_bytes, seed=seed)
    if algo == "spacesaving":
        return SpaceSaving(phi=phi, memory_budget=memory_bytes, seed=seed)
    if algo == "countmin":
        return CountMinSketch(phi=phi, memory_budget=memory_bytes, seed=seed)
    if algo == "oracle":
        return ExactOracle(phi=phi)
    raise ValueError(f"unknown algo {algo!r}")


def stream_for_run(spec: RunSpec, run: int, cache: dict | None = None) -> tuple[np.ndarray, np.ndarray]:
    if spec.input is not None:
        if cache is not None and "file" in cache:
            return cache["file"]
        stream = read_stream(spec.input)
        if cache is not None:
            cache["file"] = stream
        return stream
    items = gen_zipf(spec.zipf(run))
    return items, np.ones(items.shape[0], dtype=np.int64)


def _row(spec: RunSpec, run: int, metric: str, value, *, memory_bytes: int | None = None) -> dict:
    return {
        "run_id": run,
        "algo": spec.algo,
        "variant": spec.variant or "",
        "threads": spec.threads if spec.command == "bench-par" else 1,
        "phi": spec.phi,
        "memory_bytes": spec.memory_bytes if memory_bytes is None else memory_bytes,
        "skew": "" if spec.input is not None else spec.skew,
        "query_rate": spec.query_rate,
        "metric": metric,
        "value": value,
    }


@dataclass
class AccuracyRun:
    run: int
    result: AccuracyResult
    sketch: HeavyHitterSketch
    oracle: ExactOracle


def accuracy_runs(spec: RunSpec) -> Iterator[AccuracyRun]:
    cache: dict = {}
    for run in range(spec.repeats):
        items, weights = stream_for_run(spec, run, cache)
        oracle = ExactOracle(phi=spec.phi).fit(items, sample_weight=weights)
        if spec.algo == "oracle":
            sketch = oracle
        else:
            sketch = make_sketch(spec.algo, spec.phi, spec.memory_bytes, spec.seed + run)
            sketch.fit(items, sample_weight=weights)
        result = accuracy(oracle.heavy_hitters(), sketch.hh_query().hitters)
        yield AccuracyRun(run, result, sketch, oracle)


def accuracy_rows(spec: RunSpec) -> Iterator[dict]:
    for r in accuracy_runs(spec):
        yield _row(spec, r.run, "precision", r.result.precision)
        yield _row(spec, r.run, "recall", r.result.recall)
        yield _row(spec, r.run, "are", r.result.are)


def bench_seq_rows(spec: RunSpec) -> Iterator[dict]:
    cache: dict = {}
    for run in range(spec.repeats):
        items, weights = stream_for_run(spec, run, cache)
        sketch = make_sketch(spec.algo, spec.phi, spec.memory_bytes, spec.seed + run)
        warm = int(items.shape[0] * spec.warmup)
        sketch.partial_fit(items[:warm], sample_weight=weights[:warm])
        start = time.perf_counter()
        sketch.partial_fit(items[warm:], sample_weight=weights[warm:])
        elapsed = time.perf_counter() - start
        start = time.perf_counter()
        sketch.hh_query()
        latency = time.perf_counter() - start
        perf = perf_result(items.shape[0] - warm, elapsed, [latency])
        oracle = ExactOracle(phi=spec.phi).fit(items, sample_weight=weights)
        acc = accuracy(oracle.heavy_hitters(), sketch.hh_query().hitters)
        yield _row(spec, run, "throughput", perf.throughput)
        yield _row(spec, run, "hh_latency_us", perf.hh_latency_mean_us)
        yield _row(spec, run, "precision", acc.precision)
        yield _row(spec, run, "recall", acc.recall)
        yield _row(spec, run, "are", acc.are)


@dataclass
class ParallelRun:
    run: int
    perf: PerfResult
    sketch: ParallelHeavyHitters
    latencies: list[float]
    injected: int


def _worker_program(items: list[int], weights: list[int], query_every: int, warmup: float,
                    on_query=None):
    warm = int(len(items) * warmup)

    def program(handle):
        latencies: list[float] = []
        update = handle.update
        t_warm = time.perf_counter()
        ops = ops_at_warm = 0
        since_query = 0
        for i, (item, w) in enumerate(zip(items, weights)):
            if i == warm:
                t_warm = time.perf_counter()
                ops_at_warm = ops
            update(item, w)
            ops += 1
            since_query += 1
            if query_every and since_query == query_every - 1:
                since_query = 0
                start = time.perf_counter()
                report = handle.hh_query()
                latencies.append(time.perf_counter() - start)
                ops += 1
                if on_query is not None:
                    on_query(handle, report)
        handle.flush()
        return t_warm, time.perf_counter(), ops - ops_at_warm, latencies

    return program


def query_interval(query_rate: float) -> int:
    """Every k-th operation is an hh-query, k = round(1 / rate); 0 disables queries."""
    if query_rate <= 0:
        return 0
    return max(2, int(round(1.0 / query_rate)))


def parallel_run(spec: RunSpec, run: int, items: np.ndarray, weights: np.ndarray,
                 instrument: bool = False, on_query=None) -> ParallelRun:
    P = spec.threads
    seed = spec.seed + run

    def factory(tid: int) -> HeavyHitterSketch:
        return make_sketch(spec.algo, spec.phi, spec.memory_bytes, seed + tid)

    par = ParallelHeavyHitters(
        threads=P, variant=spec.variant, max_buf=spec.max_buf, max_w=spec.max_w,
        phi=spec.phi, per_thread_memory_bytes=spec.memory_bytes, sketch_factory=factory,
        seed=seed, instrument=instrument,
    )
    k = query_interval(spec.query_rate)
    item_list, weight_list = items.tolist(), weights.tolist()
    programs = [
        _worker_program(item_list[t::P], weight_list[t::P], k, spec.warmup, on_query)
        for t in range(P)
    ]
    results = par.run(programs)
    t_warm = min(r[0] for r in results)
    t_end = max(r[1] for r in results)
    ops = sum(r[2] for r in results)
    latencies = [x for r in results for x in r[3]]
    return ParallelRun(run, perf_result(ops, t_end - t_warm, latencies), par, latencies,
                       int(weights.sum()))


def bench_par_rows(spec: RunSpec) -> Iterator[dict]:
    cache: dict = {}
    for run in range(spec.repeats):
        items, weights = stream_for_run(spec, run, cache)
        res = parallel_run(spec, run, items, weights)
        yield _row(spec, run, "throughput", res.perf.throughput)
        yield _row(spec, run, "hh_latency_mean_us", res.perf.hh_latency_mean_us)
        yield _row(spec, run, "hh_latency_p99_us", res.perf.hh_latency_p99_us)
        yield _row(spec, run, "hh_queries", len(res.latencies))


def rows_for(spec: RunSpec) -> Iterator[dict]:
    if spec.command == "accuracy":
        return accuracy_rows(spec)
    if spec.command == "bench-seq":
        return bench_seq_rows(spec)
    if spec.command == "bench-par":
        return bench_par_rows(spec)
    raise ValueError(f"{spec.command} does not produce metric rows")


def accuracy_csv(spec: RunSpec) -> str:
    return rows_to_csv(accuracy_rows(spec))


def threads_from_env(default: int) -> int:
    value = os.environ.get("HH_THREADS")
    return int(value) if value else default


__all__ = [
    "RunSpec", "make_sketch", "accuracy_runs", "accuracy_rows", "bench_seq_rows",
    "bench_par_rows", "parallel_run", "query_interval", "rows_for", "accuracy_csv",
    "threads_from_env",
]

"""Streaming heavy-hitter detection with the Cuckoo Heavy Keeper sketch."""

from __future__ import annotations

from .base import HeavyHitterReport, HeavyHitterSketch
from .baselines import CountMinSketch, ExactOracle, SpaceSaving
from .chk import (
    ConfigError,
    CuckooHeavyKeeper,
    SketchConfig,
    alternate_index,
    generate_fp_and_indexes,
    memory_to_config,
)
from .decay import DecayTable, decay_counter, expected_counter
from .metrics import AccuracyResult, PerfResult, accuracy, perf_result, relative_improvement
from .parallel import GlobalHHTable, ParallelConfig, ParallelHeavyHitters
from .streamgen import StreamFormatError, ZipfSpec, gen_zipf, read_stream, write_stream

__version__ = "0.1.0"

__all__ = [
    "AccuracyResult", "ConfigError", "CountMinSketch", "CuckooHeavyKeeper", "DecayTable",
    "ExactOracle", "GlobalHHTable", "HeavyHitterReport", "HeavyHitterSketch",
    "ParallelConfig", "ParallelHeavyHitters", "PerfResult", "SketchConfig", "SpaceSaving",
    "StreamFormatError", "ZipfSpec", "accuracy", "alternate_index", "decay_counter",
    "expected_counter", "gen_zipf", "generate_fp_and_indexes", "memory_to_config",
    "perf_result", "read_stream", "relative_improvement", "write_stream",
]

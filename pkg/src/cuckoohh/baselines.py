"""Exact oracle and the Space-Saving / Count-Min baselines."""

from __future__ import annotations

import random

import numpy as np

from ._hashing import SALT_ROWS, seeded_salt
from ._heap import IndexedMinHeap
from ._validation import check_item, check_phi, check_weight
from .base import HeavyHitterReport, HeavyHitterSketch
from .chk import ConfigError

MERSENNE_61 = (1 << 61) - 1

# nominal accounting: 8-byte item + 8-byte count + 16 bytes of map overhead
SPACE_SAVING_ENTRY_BYTES = 32
COUNT_MIN_COUNTER_BYTES = 4


class ExactOracle(HeavyHitterSketch):
    """Lossless counts; the ground truth for every accuracy metric."""

    def __init__(self, phi: float = 0.0005):
        self.phi = phi
        self._reset()

    def _reset(self) -> None:
        check_phi(self.phi)
        self._counts: dict[int, int] = {}
        self._n = 0

    @property
    def n_processed(self) -> int:
        return self._n

    @property
    def memory_bytes(self) -> int:
        return 16 * len(self._counts)

    @property
    def counts(self) -> dict[int, int]:
        return self._counts

    def update(self, item: int, weight: int = 1) -> int:
        item = check_item(item)
        weight = check_weight(weight)
        self._n += weight
        count = self._counts.get(item, 0) + weight
        self._counts[item] = count
        return count

    def _ingest(self, items: np.ndarray, weights: np.ndarray) -> None:
        if items.size == 0:
            return
        uniq, inverse = np.unique(items, return_inverse=True)
        sums = np.bincount(inverse, weights=weights, minlength=uniq.size).astype(np.int64)
        counts = self._counts
        for e, c in zip(uniq.tolist(), sums.tolist()):
            counts[e] = counts.get(e, 0) + c
        self._n += int(weights.sum())

    def f_query(self, item: int) -> int:
        return self._counts.get(item, 0)

    def heavy_hitters(self, phi: float | None = None) -> dict[int, int]:
        threshold = (self.phi if phi is None else check_phi(phi)) * self._n
        return {e: c for e, c in self._counts.items() if c >= threshold}

    def hh_query(self, phi: float | None = None) -> HeavyHitterReport:
        return HeavyHitterReport(self.heavy_hitters(phi), self._n)


class SpaceSaving(HeavyHitterSketch):
    """Weighted Space-Saving with ``capacity`` counters.

    An untracked item arriving at a full summary takes over the minimum
    counter and adds its weight to it, so every count overestimates.
    """

    def __init__(self, phi: float = 0.0005, memory_budget: int | None = 4096,
                 capacity: int | None = None, seed: int = 0):
        self.phi = phi
        self.memory_budget = memory_budget
        self.capacity = capacity
        self.seed = seed
        self._reset()

    def _reset(self) -> None:
        self._phi = check_phi(self.phi)
        if self.capacity is not None:
            k = int(self.capacity)
        elif self.memory_budget is not None:
            k = int(self.memory_budget) // SPACE_SAVING_ENTRY_BYTES
        else:
            raise ConfigError("set memory_budget or capacity")
        if k < 1:
            raise ConfigError(f"Space-Saving needs at least one counter, got {k}")
        self.capacity_ = k
        self._summary = IndexedMinHeap()
        self._n = 0

    @property
    def n_processed(self) -> int:
        return self._n

    @property
    def memory_bytes(self) -> int:
        return self.capacity_ * SPACE_SAVING_ENTRY_BYTES

    def update(self, item: int, weight: int = 1) -> int:
        return self._apply(check_item(item), check_weight(weight))

    def _ingest(self, items: np.ndarray, weights: np.ndarray) -> None:
        apply = self._apply
        for item, w in zip(items.tolist(), weights.tolist()):
            apply(item, w)

    def _apply(self, item: int, w: int) -> int:
        self._n += w
        summary = self._summary
        if item in summary:
            summary.add(item, w)
            return summary.get(item)
        if len(summary) < self.capacity_:
            summary.push_or_increase(item, w)
            return w
        _, floor = summary.min()
        summary.replace_min(item, floor + w)
        return summary.get(item)

    def f_query(self, item: int) -> int:
        return self._summary.get(item, 0)

    def hh_query(self) -> HeavyHitterReport:
        threshold = self._phi * self._n
        hitters = {e: c for e, c in self._summary.items().items() if c >= threshold}
        return HeavyHitterReport(hitters, self._n)


class CountMinSketch(HeavyHitterSketch):
    """Count-Min sketch with a lazily pruned heavy-hitter heap.

    Row hashes are Carter-Wegman ``((a x + b) mod p) mod width`` with
    ``p = 2**61 - 1``. With ``memory_budget`` set, ``width`` is the budget
    divided by ``depth`` 32-bit counters.
    """

    def __init__(self, phi: float = 0.0005, memory_budget: int | None = 4096,
                 width: int | None = None, depth: int = 4, seed: int = 0):
        self.phi = phi
        self.memory_budget = memory_budget
        self.width = width
        self.depth = depth
        self.seed = seed
        self._reset()

    def _reset(self) -> None:
        self._phi = check_phi(self.phi)
        if self.depth < 1:
            raise ConfigError(f"depth must be >= 1, got {self.depth}")
        if self.width is not None:
            width = int(self.width)
        elif self.memory_budget is not None:
            width = int(self.memory_budget) // (self.depth * COUNT_MIN_COUNTER_BYTES)
        else:
            raise ConfigError("set memory_budget or width")
        if width < 1:
            raise ConfigError(f"Count-Min width must be >= 1, got {width}")
        self.width_ = width
        rng = random.Random(seeded_salt(self.seed, SALT_ROWS))
        self._coeffs = [
            (rng.randrange(1, MERSENNE_61), rng.randrange(0, MERSENNE_61)) for _ in range(self.depth)
        ]
        self._rows = [[0] * width for _ in range(self.depth)]
        self._heap = IndexedMinHeap()
        self._n = 0

    @property
    def n_processed(self) -> int:
        return self._n

    @property
    def memory_bytes(self) -> int:
        return self.depth * self.width_ * COUNT_MIN_COUNTER_BYTES

    def _columns(self, item: int) -> tuple[int, ...]:
        x = item % MERSENNE_61
        w = self.width_
        return tuple(((a * x + b) % MERSENNE_61) % w for a, b in self._coeffs)

    def update(self, item: int, weight: int = 1) -> int:
        item = check_item(item)
        return self._apply(item, self._columns(item), check_weight(weight))

    def _ingest(self, items: np.ndarray, weights: np.ndarray) -> None:
        if items.size == 0:
            return
        uniq, inverse = np.unique(items, return_inverse=True)
        columns = [self._columns(e) for e in uniq.tolist()]
        apply = self._apply
        for item, k, w in zip(items.tolist(), inverse.tolist(), weights.tolist()):
            apply(item, columns[k], w)

    def _apply(self, item: int, columns: tuple[int, ...], w: int) -> int:
        n = self._n + w
        self._n = n
        est = None
        for row, col in zip(self._rows, columns):
            c = row[col] + w
            row[col] = c
            if est is None or c < est:
                est = c
        if est >= self._phi * n:
            self._heap.push_or_increase(item, est)
        return est

    def f_query(self, item: int) -> int:
        cols = self._columns(check_item(item))
        return min(row[col] for row, col in zip(self._rows, cols))

    def hh_query(self) -> HeavyHitterReport:
        self._heap.pop_below(self._phi * self._n)
        return HeavyHitterReport(self._heap.items(), self._n)

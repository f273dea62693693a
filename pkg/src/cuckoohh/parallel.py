"""Domain-splitting parallel wrapper around any heavy-hitter sketch.

Every item has one owner thread (``hash(item) mod P``). Workers buffer
updates per owner and hand full buffers over through the owner's queue;
point queries are delegated through per-(owner, requester) slots. While a
worker waits on a hand-off or a query it services its own pending work.

Two heavy-hitter query designs:

``"I"`` (insertion-optimised)
    Owners drain their queues under a per-thread lock taken
    opportunistically. An hh-query scans all local sketches, skipping
    threads whose lock is busy and retrying them later.
``"Q"`` (query-optimised)
    Owners drain lock-free and publish above-threshold items to a shared
    table. An hh-query scans only that table, double-collecting each slot.

Workers are Python threads; call :meth:`ParallelHeavyHitters.run` (or
``fit``) to drive them, or build your own programs on :class:`WorkerHandle`.
"""

from __future__ import annotations

import math
import threading
import time
from collections import deque
from itertools import compress
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._hashing import SALT_OWNER, hash64, seeded_salt
from ._validation import check_item, check_phi, check_positive_int, check_stream, check_weight
from .base import HeavyHitterReport, HeavyHitterSketch
from .chk import CuckooHeavyKeeper

INSERTION_OPTIMIZED = "I"
QUERY_OPTIMIZED = "Q"
VARIANTS = (INSERTION_OPTIMIZED, QUERY_OPTIMIZED)

EMPTY, PENDING, PROCESSED = 0, 1, 2

# upper bound on one blocking wait; waits re-check their condition after it
WAIT_SLICE = 0.001


@dataclass(frozen=True)
class ParallelConfig:
    threads: int = 1
    max_buf: int = 16
    max_w: int = 1000
    variant: str = INSERTION_OPTIMIZED
    per_thread_memory_bytes: int = 1024
    phi: float = 0.00005
    seed: int = 0

    def __post_init__(self):
        check_positive_int(self.threads, "threads")
        check_positive_int(self.max_buf, "max_buf")
        check_positive_int(self.max_w, "max_w")
        check_phi(self.phi)
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")


class AtomicCounter:
    """Shared integer counter; adds are serialised, reads are plain loads."""

    __slots__ = ("_value", "_lock")

    def __init__(self, value: int = 0):
        self._value = value
        self._lock = threading.Lock()

    def add(self, delta: int) -> int:
        with self._lock:
            self._value += delta
            return self._value

    @property
    def value(self) -> int:
        return self._value


class DelegationBuffer:
    """A handed-off buffer: per-item accumulated weights for one owner."""

    __slots__ = ("owner", "producer", "weights", "processed")

    def __init__(self, owner: int, producer: int, weights: dict[int, int]):
        self.owner = owner
        self.producer = producer
        self.weights = weights
        self.processed = False


class QuerySlot:
    """Point-query mailbox from one requester to one owner.

    The requester writes ``item`` then flips ``status`` to PENDING; the owner
    writes ``count`` then flips it to PROCESSED. ``status`` is the only
    field both sides write, and each transition has a single writer.
    """

    __slots__ = ("item", "count", "status")

    def __init__(self):
        self.item = 0
        self.count = 0
        self.status = EMPTY


class GlobalHHTable:
    """Fixed-capacity table of published ``(item, count)`` pairs.

    Writers serialise on a mutex and bump the slot version to odd before and
    back to even after touching the fields. Readers never lock: they collect
    the columns twice and accept a slot only when both reads agree and its
    version is even.

    Columns are plain lists so a collect never drops the GIL mid-scan; with
    numpy columns a reader would queue behind busy workers on every ufunc.
    """

    def __init__(self, capacity: int):
        self.capacity = check_positive_int(capacity, "capacity")
        self._items: list[int] = [0] * capacity
        self._counts: list[int] = [0] * capacity
        self._versions: list[int] = [0] * capacity
        self._index: dict[int, int] = {}
        self._used = 0
        self._lock = threading.Lock()
        self.evictions = 0
        self.read_retries = 0

    @classmethod
    def for_phi(cls, phi: float) -> "GlobalHHTable":
        return cls(int(math.ceil(4.0 / phi)))

    def __len__(self) -> int:
        return self._used

    def publish(self, item: int, count: int) -> None:
        with self._lock:
            slot = self._index.get(item)
            fresh = False
            if slot is None:
                if self._used < self.capacity:
                    slot = self._used
                    fresh = True
                else:
                    counts = self._counts
                    slot = min(range(self.capacity), key=counts.__getitem__)
                    del self._index[self._items[slot]]
                    self.evictions += 1
                self._index[item] = slot
            versions = self._versions
            versions[slot] += 1
            self._items[slot] = item
            self._counts[slot] = count
            versions[slot] += 1
            if fresh:
                # readers only look at slots below _used, so expose it last
                self._used = slot + 1

    def read_slot(self, slot: int) -> tuple[int, int, int]:
        """``(version, item, count)`` of one slot; version 0 means never written."""
        items, counts, versions = self._items, self._counts, self._versions
        while True:
            first = (versions[slot], items[slot], counts[slot])
            second = (versions[slot], items[slot], counts[slot])
            if first == second and not first[0] & 1:
                return first
            self.read_retries += 1

    def collect(self, threshold: float) -> dict[int, int]:
        """Double-collect every slot; keep entries with ``count >= threshold``."""
        used = self._used
        v1, e1, c1 = self._versions[:used], self._items[:used], self._counts[:used]
        v2, e2, c2 = self._versions[:used], self._items[:used], self._counts[:used]
        # writers are serialised, so at most one version is odd at a time
        if v1 == v2 and e1 == e2 and c1 == c2 and not sum(v1) & 1:
            return dict(compress(zip(e1, c1), map(float(threshold).__le__, c1)))
        self.read_retries += 1
        out = {}
        for slot in range(used):
            version, item, count = self.read_slot(slot)
            if version and count >= threshold:
                out[item] = count
        return out


class ParallelHeavyHitters(BaseEstimator):
    """Delegation-based parallel heavy-hitter detection.

    Parameters
    ----------
    threads : int
        Number of worker threads ``P``; each owns one wrapped sketch.
    variant : {"I", "Q"}
        hh-query design, see the module docstring.
    max_buf, max_w : int
        A buffer is handed off once it holds ``max_buf`` distinct items or
        one item's accumulated weight reaches ``max_w``.
    phi : float
        Heavy-hitter threshold relative to the global processed weight.
    per_thread_memory_bytes : int
        Table budget of each default-constructed local sketch.
    sketch_factory : callable, optional
        ``factory(tid) -> HeavyHitterSketch``. Defaults to a Cuckoo Heavy
        Keeper seeded with ``seed + tid``.
    instrument : bool
        Track injected and applied weight per item so the buffering
        staleness can be measured (slower).
    """

    def __init__(
        self,
        threads: int = 1,
        variant: str = INSERTION_OPTIMIZED,
        max_buf: int = 16,
        max_w: int = 1000,
        phi: float = 0.00005,
        per_thread_memory_bytes: int = 1024,
        sketch_factory: Callable[[int], HeavyHitterSketch] | None = None,
        seed: int = 0,
        instrument: bool = False,
    ):
        self.threads = threads
        self.variant = variant
        self.max_buf = max_buf
        self.max_w = max_w
        self.phi = phi
        self.per_thread_memory_bytes = per_thread_memory_bytes
        self.sketch_factory = sketch_factory
        self.seed = seed
        self.instrument = instrument
        self._reset()

    @classmethod
    def from_config(cls, config: ParallelConfig, **kwargs) -> "ParallelHeavyHitters":
        return cls(
            threads=config.threads,
            variant=config.variant,
            max_buf=config.max_buf,
            max_w=config.max_w,
            phi=config.phi,
            per_thread_memory_bytes=config.per_thread_memory_bytes,
            seed=config.seed,
            **kwargs,
        )

    def _default_factory(self, tid: int) -> HeavyHitterSketch:
        return CuckooHeavyKeeper(
            phi=self.phi, memory_budget=self.per_thread_memory_bytes, seed=self.seed + tid
        )

    def _reset(self) -> None:
        self.config_ = ParallelConfig(
            threads=self.threads,
            max_buf=self.max_buf,
            max_w=self.max_w,
            variant=self.variant,
            per_thread_memory_bytes=self.per_thread_memory_bytes,
            phi=self.phi,
            seed=self.seed,
        )
        P = self.threads
        factory = self.sketch_factory or self._default_factory
        self.sketches_ = [factory(tid) for tid in range(P)]
        self._owner_salt = seeded_salt(self.seed, SALT_OWNER)
        self._queues: list[deque] = [deque() for _ in range(P)]
        self._locks = [threading.Lock() for _ in range(P)]
        # _slots[owner][requester]
        self._slots = [[QuerySlot() for _ in range(P)] for _ in range(P)]
        self._query_flags = [False] * P
        # wakes a blocked worker when work or an answer arrives for it
        self._bells = [threading.Event() for _ in range(P)]
        self._n = AtomicCounter()
        self._finished = AtomicCounter()
        self.table_ = GlobalHHTable.for_phi(self.phi) if self.variant == QUERY_OPTIMIZED else None
        self._handles = [WorkerHandle(self, tid) for tid in range(P)]
        # instrumentation: injected[tid] written by producer tid, applied[owner] by owner
        self._ilock = threading.Lock()
        self._injected: list[dict[int, int]] = [{} for _ in range(P)]
        self._applied: list[dict[int, int]] = [{} for _ in range(P)]
        self.scan_passes_ = 0
        self.max_missing_weight_ = 0
        self.staleness_violations_ = 0

    # -- ownership and shared state -----------------------------------------

    def owner(self, item: int) -> int:
        return hash64(item, self._owner_salt) % self.threads

    def handle(self, tid: int) -> "WorkerHandle":
        return self._handles[tid]

    @property
    def n_processed(self) -> int:
        """Weight applied to the owner sketches so far (the shared counter)."""
        return self._n.value

    @property
    def memory_bytes(self) -> int:
        return sum(s.memory_bytes for s in self.sketches_)

    def buffered_weight(self) -> int:
        """Weight sitting in worker buffers or queues; exact only at quiescence."""
        held = sum(sum(buf.values()) for h in self._handles for buf in h._buffers)
        queued = sum(sum(ref.weights.values()) for q in self._queues for ref in list(q))
        return held + queued

    def missing_weight(self, item: int) -> int:
        """Injected weight of ``item`` not yet applied by its owner (instrumented runs)."""
        if not self.instrument:
            raise RuntimeError("missing_weight needs instrument=True")
        owner = self.owner(item)
        with self._ilock:
            injected = sum(d.get(item, 0) for d in self._injected)
            return injected - self._applied[owner].get(item, 0)

    def check_staleness(self, items) -> int:
        """Record the largest missing weight among ``items``; return violations found."""
        bound = self.threads * self.max_w
        violations = 0
        for item in items:
            missing = self.missing_weight(item)
            if missing > self.max_missing_weight_:
                self.max_missing_weight_ = missing
            if missing > bound:
                violations += 1
        self.staleness_violations_ += violations
        return violations

    # -- driving worker threads ----------------------------------------------

    def run(self, programs: Sequence[Callable[["WorkerHandle"], object]]) -> list:
        """Run ``programs[tid](handle(tid))`` on P threads, then drain.

        Each program runs its operations; afterwards its worker flushes and
        keeps servicing peers until every worker has finished, so on return
        the system is quiescent. Returns the programs' return values.
        """
        if len(programs) != self.threads:
            raise ValueError(f"need {self.threads} programs, got {len(programs)}")
        self._finished = AtomicCounter()
        results: list = [None] * self.threads
        errors: list = []

        def body(tid: int) -> None:
            handle = self._handles[tid]
            try:
                results[tid] = programs[tid](handle)
            except BaseException as exc:  # surfaced in the calling thread
                errors.append(exc)
            finally:
                handle.finish()

        if self.threads == 1:
            body(0)
        else:
            workers = [threading.Thread(target=body, args=(tid,), daemon=True) for tid in range(self.threads)]
            for w in workers:
                w.start()
            for w in workers:
                w.join()
        if errors:
            raise errors[0]
        return results

    def partial_fit(self, X, y=None, sample_weight=None):
        """Feed ``X`` round-robin to the workers and drain."""
        items, weights = check_stream(X, sample_weight)
        P = self.threads

        def program(handle: WorkerHandle) -> None:
            update = handle.update
            for item, w in zip(items[handle.tid::P].tolist(), weights[handle.tid::P].tolist()):
                update(item, w)

        self.run([program] * P)
        return self

    def fit(self, X, y=None, sample_weight=None):
        self._reset()
        return self.partial_fit(X, sample_weight=sample_weight)

    # -- quiescent queries (calling thread is not a worker) ------------------

    def f_query(self, item: int) -> int:
        item = check_item(item)
        return self.sketches_[self.owner(item)].f_query(item)

    def predict(self, X) -> np.ndarray:
        items, _ = check_stream(X)
        return np.array([self.f_query(e) for e in items.tolist()], dtype=np.int64)

    def hh_query(self) -> HeavyHitterReport:
        if self.variant == QUERY_OPTIMIZED:
            return self._hh_query_q()
        return self._hh_query_i(None)

    def _hh_query_q(self) -> HeavyHitterReport:
        n = self._n.value
        return HeavyHitterReport(self.table_.collect(self.phi * n), n)

    def _hh_query_i(self, handle: "WorkerHandle | None") -> HeavyHitterReport:
        P = self.threads
        scanned = [False] * P
        remaining = P
        result: dict[int, int] = {}
        while remaining:
            progress = False
            self.scan_passes_ += 1
            for tid in range(P):
                if scanned[tid] or not self._locks[tid].acquire(blocking=False):
                    continue
                try:
                    candidates = self.sketches_[tid].hh_query().hitters
                finally:
                    self._locks[tid].release()
                threshold = self.phi * self._n.value
                for item, count in candidates.items():
                    if count >= threshold:
                        result[item] = count
                scanned[tid] = True
                remaining -= 1
                progress = True
            if remaining and not progress:
                if handle is None or not handle.process_pending_updates():
                    time.sleep(0)
        return HeavyHitterReport(result, self._n.value)


class WorkerHandle:
    """Operations issued from worker thread ``tid``.

    A handle must only be used from its own thread while workers run.
    """

    def __init__(self, parent: ParallelHeavyHitters, tid: int):
        self._p = parent
        self.tid = tid
        self._buffers: list[dict[int, int]] = [{} for _ in range(parent.threads)]
        self._sketch = parent.sketches_[tid]
        self._queue = parent._queues[tid]
        self._lock = parent._locks[tid]
        self.handoffs = 0

    @property
    def parent(self) -> ParallelHeavyHitters:
        return self._p

    # -- producer side ---------------------------------------------------

    def update(self, item: int, weight: int = 1) -> None:
        p = self._p
        if self._queue or p._query_flags[self.tid]:
            self._service()
        item = check_item(item)
        weight = check_weight(weight)
        owner = p.owner(item)
        buf = self._buffers[owner]
        acc = buf.get(item, 0) + weight
        buf[item] = acc
        if p.instrument:
            injected = p._injected[self.tid]
            with p._ilock:
                injected[item] = injected.get(item, 0) + weight
        if len(buf) >= p.max_buf or acc >= p.max_w:
            self._hand_off(owner)

    def _hand_off(self, owner: int) -> None:
        buf = self._buffers[owner]
        self._buffers[owner] = {}
        ref = DelegationBuffer(owner, self.tid, buf)
        self._p._queues[owner].append(ref)
        self._p._bells[owner].set()
        self.handoffs += 1
        self._wait(lambda: ref.processed)

    def flush(self) -> None:
        """Hand off every non-empty buffer, waiting for each to be applied."""
        for owner, buf in enumerate(self._buffers):
            if buf:
                self._hand_off(owner)

    def finish(self) -> None:
        """Flush, then keep servicing peers until every worker has finished."""
        p = self._p
        self.flush()
        p._finished.add(1)
        for bell in p._bells:
            bell.set()
        self._wait(lambda: p._finished.value >= p.threads)
        self._service()

    def f_query(self, item: int) -> int:
        """Delegate a point query to the item's owner and wait for the answer."""
        p = self._p
        item = check_item(item)
        owner = p.owner(item)
        slot = p._slots[owner][self.tid]
        slot.item = item
        slot.count = 0
        slot.status = PENDING
        p._query_flags[owner] = True
        p._bells[owner].set()
        self._wait(lambda: slot.status == PROCESSED)
        count = slot.count
        slot.status = EMPTY
        return count

    def hh_query(self) -> HeavyHitterReport:
        p = self._p
        if p.variant == QUERY_OPTIMIZED:
            return p._hh_query_q()
        return p._hh_query_i(self)

    # -- owner side ----------------------------------------------------------

    def _wait(self, done: Callable[[], bool]) -> None:
        bell = self._p._bells[self.tid]
        while True:
            bell.clear()
            if done():
                return
            if not self._service() and not done():
                bell.wait(WAIT_SLICE)

    def _service(self) -> bool:
        worked = self.process_pending_updates()
        return self.process_pending_queries() or worked

    def process_pending_updates(self) -> bool:
        """Apply every buffer queued for this worker. Returns True if any was applied."""
        if not self._queue:
            return False
        p = self._p
        if p.variant == QUERY_OPTIMIZED:
            return self._drain()
        if not self._lock.acquire(blocking=False):
            return False
        try:
            return self._drain()
        finally:
            self._lock.release()

    def _drain(self) -> bool:
        p = self._p
        queue = self._queue
        update = self._sketch.update
        publish = p.table_.publish if p.variant == QUERY_OPTIMIZED else None
        phi = p.phi
        worked = False
        while queue:
            ref = queue.popleft()
            total = 0
            base = p._n.value
            for item, w in ref.weights.items():
                count = update(item, w)
                total += w
                if publish is not None and count >= phi * (base + total):
                    publish(item, count)
            p._n.add(total)
            if p.instrument:
                applied = p._applied[self.tid]
                with p._ilock:
                    for item, w in ref.weights.items():
                        applied[item] = applied.get(item, 0) + w
            ref.processed = True
            p._bells[ref.producer].set()
            worked = True
        return worked

    def process_pending_queries(self) -> bool:
        p = self._p
        if not p._query_flags[self.tid]:
            return False
        p._query_flags[self.tid] = False
        worked = False
        for slot in p._slots[self.tid]:
            if slot.status == PENDING:
                slot.count = self._sketch.f_query(slot.item)
                slot.status = PROCESSED
                worked = True
        if worked:
            for requester, slot in enumerate(p._slots[self.tid]):
                if slot.status == PROCESSED:
                    p._bells[requester].set()
        return worked

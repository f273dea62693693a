"""Sequential Cuckoo Heavy Keeper.

Two tables of buckets. Each bucket holds one lobby entry, a small
decaying counter that filters out infrequent items, and a few heavy entries
that count promoted candidates exactly. Heavy-entry collisions are resolved
with partial-key cuckoo hashing: an entry's alternate bucket is derived from
its current bucket and its fingerprint alone.

Buckets are stored flat: bucket ``g`` is ``idx`` in table 0 when ``g < B``
and ``g - B`` in table 1; heavy slot ``s`` of bucket ``g`` lives at
``g * heavy_slots + s``. Fingerprint 0 marks an empty entry.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._hashing import SALT_ALTERNATE, SALT_FINGERPRINT, SALT_INDEX, hash64, seeded_salt
from ._heap import IndexedMinHeap
from ._validation import check_item, check_phi, check_weight, is_power_of_two
from .base import HeavyHitterReport, HeavyHitterSketch
from .decay import DecayTable, decay_counter

DEFAULT_MEMORY_BUDGET = 4096


class ConfigError(ValueError):
    """Raised for sketch parameters that cannot be realised."""


@dataclass(frozen=True)
class SketchConfig:
    buckets_per_table: int = 128
    lobby_threshold: int = 16
    decay_base: float = 1.08
    fingerprint_bits: int = 16
    heavy_slots: int = 2
    max_kicks: int = 16
    phi: float = 0.0005
    seed: int = 0
    early_placement: bool = True
    # factor of N below which a displaced entry is dropped; None means phi
    kick_threshold: float | None = None

    def __post_init__(self):
        if not is_power_of_two(self.buckets_per_table):
            raise ConfigError(
                f"buckets_per_table must be a power of two, got {self.buckets_per_table}"
            )
        if not 1 <= self.lobby_threshold <= 255:
            raise ConfigError(f"lobby_threshold must fit an 8-bit counter, got {self.lobby_threshold}")
        if not self.decay_base > 1.0:
            raise ConfigError(f"decay_base must be > 1, got {self.decay_base}")
        if not 1 <= self.fingerprint_bits <= 32:
            raise ConfigError(f"fingerprint_bits must lie in [1, 32], got {self.fingerprint_bits}")
        if self.heavy_slots < 1:
            raise ConfigError(f"heavy_slots must be >= 1, got {self.heavy_slots}")
        if self.max_kicks < 1:
            raise ConfigError(f"max_kicks must be >= 1, got {self.max_kicks}")
        try:
            check_phi(self.phi)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.kick_threshold is not None and self.kick_threshold < 0:
            raise ConfigError(f"kick_threshold must be >= 0, got {self.kick_threshold}")

    @property
    def bucket_bytes(self) -> int:
        return bucket_bytes(self.fingerprint_bits, self.heavy_slots)

    @property
    def memory_bytes(self) -> int:
        return 2 * self.buckets_per_table * self.bucket_bytes


def bucket_bytes(fingerprint_bits: int = 16, heavy_slots: int = 2) -> int:
    """Packed bucket size: lobby (fp + 8-bit counter) plus heavy (fp + 32-bit counter) slots."""
    fp_bytes = (fingerprint_bits + 7) // 8
    return (fp_bytes + 1) + heavy_slots * (fp_bytes + 4)


def memory_to_config(memory_bytes: int, **params) -> SketchConfig:
    """Largest power-of-two table size whose two tables fit in ``memory_bytes``.

    The auxiliary heavy-hitter heap is not charged to the budget.
    """
    per_bucket = bucket_bytes(params.get("fingerprint_bits", 16), params.get("heavy_slots", 2))
    n_buckets = int(memory_bytes) // (2 * per_bucket)
    if n_buckets < 1:
        raise ConfigError(
            f"memory budget of {memory_bytes} bytes is below two buckets ({2 * per_bucket} bytes)"
        )
    return SketchConfig(buckets_per_table=1 << (n_buckets.bit_length() - 1), **params)


@lru_cache(maxsize=64)
def _alternate_offsets(seed: int, fingerprint_bits: int, mask: int) -> tuple[int, ...]:
    salt = seeded_salt(seed, SALT_ALTERNATE)
    return tuple(hash64(fp, salt) & mask for fp in range(1 << fingerprint_bits))


def generate_fp_and_indexes(item: int, config: SketchConfig) -> tuple[int, int, int]:
    """Fingerprint and the two candidate bucket indexes of ``item``."""
    mask = config.buckets_per_table - 1
    idx0 = hash64(item, seeded_salt(config.seed, SALT_INDEX)) & mask
    fp = hash64(item, seeded_salt(config.seed, SALT_FINGERPRINT)) >> (64 - config.fingerprint_bits)
    if fp == 0:
        fp = 1
    idx1 = idx0 ^ _alternate_offsets(config.seed, config.fingerprint_bits, mask)[fp]
    return fp, idx0, idx1


def alternate_index(index: int, fp: int, config: SketchConfig) -> int:
    """Partner bucket index for an entry with fingerprint ``fp`` stored at ``index``."""
    mask = config.buckets_per_table - 1
    return (index ^ _alternate_offsets(config.seed, config.fingerprint_bits, mask)[fp]) & mask


class CuckooHeavyKeeper(HeavyHitterSketch):
    """Cuckoo Heavy Keeper heavy-hitter sketch.

    Parameters
    ----------
    phi : float
        Heavy-hitter threshold as a fraction of the processed weight.
    memory_budget : int, optional
        Bytes available for the two tables; picks ``buckets_per_table``.
        Defaults to 4096 when neither this nor ``buckets_per_table`` is set.
    buckets_per_table : int, optional
        Explicit table size (power of two).
    lobby_threshold, decay_base, fingerprint_bits, heavy_slots, max_kicks :
        Bucket layout and decay tunables.
    early_placement : bool
        Place untracked items straight into an empty heavy slot.
    kick_threshold : float, optional
        Displaced entries with counter below ``kick_threshold * N`` are
        dropped during kickout. Defaults to ``phi``; 0 disables the cut-off.
    seed : int
        Seeds both the hash functions and the promotion/decay RNG.
    """

    def __init__(
        self,
        phi: float = 0.0005,
        memory_budget: int | None = None,
        buckets_per_table: int | None = None,
        lobby_threshold: int = 16,
        decay_base: float = 1.08,
        fingerprint_bits: int = 16,
        heavy_slots: int = 2,
        max_kicks: int = 16,
        early_placement: bool = True,
        kick_threshold: float | None = None,
        seed: int = 0,
    ):
        self.phi = phi
        self.memory_budget = memory_budget
        self.buckets_per_table = buckets_per_table
        self.lobby_threshold = lobby_threshold
        self.decay_base = decay_base
        self.fingerprint_bits = fingerprint_bits
        self.heavy_slots = heavy_slots
        self.max_kicks = max_kicks
        self.early_placement = early_placement
        self.kick_threshold = kick_threshold
        self.seed = seed
        self._reset()

    @classmethod
    def from_config(cls, config: SketchConfig) -> "CuckooHeavyKeeper":
        return cls(
            phi=config.phi,
            buckets_per_table=config.buckets_per_table,
            lobby_threshold=config.lobby_threshold,
            decay_base=config.decay_base,
            fingerprint_bits=config.fingerprint_bits,
            heavy_slots=config.heavy_slots,
            max_kicks=config.max_kicks,
            early_placement=config.early_placement,
            kick_threshold=config.kick_threshold,
            seed=config.seed,
        )

    def _make_config(self) -> SketchConfig:
        params = dict(
            lobby_threshold=self.lobby_threshold,
            decay_base=self.decay_base,
            fingerprint_bits=self.fingerprint_bits,
            heavy_slots=self.heavy_slots,
            max_kicks=self.max_kicks,
            phi=self.phi,
            seed=self.seed,
            early_placement=self.early_placement,
            kick_threshold=self.kick_threshold,
        )
        if self.buckets_per_table is not None:
            if self.memory_budget is not None:
                raise ConfigError("set either memory_budget or buckets_per_table, not both")
            return SketchConfig(buckets_per_table=self.buckets_per_table, **params)
        budget = DEFAULT_MEMORY_BUDGET if self.memory_budget is None else self.memory_budget
        return memory_to_config(budget, **params)

    def _reset(self) -> None:
        cfg = self._make_config()
        self.config_ = cfg
        n_buckets = cfg.buckets_per_table
        self._B = n_buckets
        self._mask = n_buckets - 1
        self._S = cfg.heavy_slots
        self._L = cfg.lobby_threshold
        self._phi = cfg.phi
        self._kick_phi = cfg.phi if cfg.kick_threshold is None else cfg.kick_threshold
        self._decay = DecayTable(cfg.decay_base, cfg.lobby_threshold)
        self._salt_index = seeded_salt(cfg.seed, SALT_INDEX)
        self._salt_fp = seeded_salt(cfg.seed, SALT_FINGERPRINT)
        self._fp_shift = 64 - cfg.fingerprint_bits
        self._alt = _alternate_offsets(cfg.seed, cfg.fingerprint_bits, self._mask)
        self._lobby_fp = [0] * (2 * n_buckets)
        self._lobby_c = [0] * (2 * n_buckets)
        self._heavy_fp = [0] * (2 * n_buckets * self._S)
        self._heavy_c = [0] * (2 * n_buckets * self._S)
        self._rng = random.Random(cfg.seed)
        self._heap = IndexedMinHeap()
        self._n = 0
        self.kickout_swaps_ = 0
        self.kickout_drops_ = 0

    # -- hashing -----------------------------------------------------------

    def _locate(self, item: int) -> tuple[int, int, int]:
        """(fingerprint, bucket in table 0, bucket in table 1) as flat bucket ids."""
        idx0 = hash64(item, self._salt_index) & self._mask
        fp = hash64(item, self._salt_fp) >> self._fp_shift
        if fp == 0:
            fp = 1
        return fp, idx0, self._B + (idx0 ^ self._alt[fp])

    def _alternate_bucket(self, g: int, fp: int) -> int:
        if g < self._B:
            return self._B + (g ^ self._alt[fp])
        return (g - self._B) ^ self._alt[fp]

    # -- streaming API -----------------------------------------------------

    @property
    def n_processed(self) -> int:
        return self._n

    @property
    def memory_bytes(self) -> int:
        return self.config_.memory_bytes

    @property
    def decay_table(self) -> DecayTable:
        return self._decay

    def update(self, item: int, weight: int = 1) -> int:
        """Process ``(item, weight)``; return the item's current estimate.

        The estimate is the heavy counter if the item is tracked there, its
        lobby counter if it sits in a lobby, else 0.
        """
        item = check_item(item)
        weight = check_weight(weight)
        fp, g0, g1 = self._locate(item)
        return self._apply(item, fp, g0, g1, weight)

    def _ingest(self, items: np.ndarray, weights: np.ndarray) -> None:
        if items.size == 0:
            return
        uniq, inverse = np.unique(items, return_inverse=True)
        located = [self._locate(e) for e in uniq.tolist()]
        apply = self._apply
        for item, k, w in zip(items.tolist(), inverse.tolist(), weights.tolist()):
            fp, g0, g1 = located[k]
            apply(item, fp, g0, g1, w)

    def _apply(self, item: int, fp: int, g0: int, g1: int, w: int) -> int:
        n = self._n + w
        self._n = n
        S = self._S
        hfp = self._heavy_fp
        hc = self._heavy_c

        # tracked in the heavy part: the common case
        base0 = g0 * S
        base1 = g1 * S
        for s in range(base0, base0 + S):
            if hfp[s] == fp:
                est = hc[s] = hc[s] + w
                break
        else:
            for s in range(base1, base1 + S):
                if hfp[s] == fp:
                    est = hc[s] = hc[s] + w
                    break
            else:
                est = self._apply_untracked(fp, g0, g1, w)

        if est >= self._phi * n:
            self._heap.push_or_increase(item, est)
        return est

    def _apply_untracked(self, fp: int, g0: int, g1: int, w: int) -> int:
        lfp = self._lobby_fp
        lc = self._lobby_c
        L = self._L

        if lfp[g0] == fp:
            g = g0
        elif lfp[g1] == fp:
            g = g1
        else:
            g = -1
        if g >= 0:
            c = lc[g] + w
            if c >= L:
                self._try_promote(g, c)
            else:
                lc[g] = c
            return self._estimate(fp, g0, g1)

        if self.config_.early_placement:
            S = self._S
            hfp = self._heavy_fp
            for base in (g0 * S, g1 * S):
                for s in range(base, base + S):
                    if hfp[s] == 0:
                        hfp[s] = fp
                        self._heavy_c[s] = w
                        return w

        if lfp[g0] == 0:
            g = g0
        elif lfp[g1] == 0:
            g = g1
        if g >= 0:
            lfp[g] = fp
            if w >= L:
                self._try_promote(g, w)
            else:
                lc[g] = w
            return self._estimate(fp, g0, g1)

        # both lobbies taken by other items: decay the one picked by fp parity
        g = g1 if fp & 1 else g0
        c = lc[g]
        if c == 0:
            new_c, leftover = 0, w
        elif w == 1:
            # inlined unit decay
            new_c = c - 1 if self._rng.random() < self._decay.decay_base**-c else c
            leftover = 1
        else:
            new_c, leftover = decay_counter(self._decay, c, w, self._rng)
        if new_c == 0:
            lfp[g] = fp
            if leftover >= L:
                self._try_promote(g, leftover)
            else:
                lc[g] = leftover
            return self._estimate(fp, g0, g1)
        if new_c >= L:
            # the occupant is at the threshold: it gets another promotion attempt
            self._try_promote(g, new_c)
        else:
            lc[g] = new_c
        return self._estimate(fp, g0, g1)

    def _estimate(self, fp: int, g0: int, g1: int) -> int:
        S = self._S
        hfp = self._heavy_fp
        for base in (g0 * S, g1 * S):
            for s in range(base, base + S):
                if hfp[s] == fp:
                    return self._heavy_c[s]
        if self._lobby_fp[g0] == fp:
            return self._lobby_c[g0]
        if self._lobby_fp[g1] == fp:
            return self._lobby_c[g1]
        return 0

    def _min_slot(self, base: int) -> int:
        hc = self._heavy_c
        m = base
        for s in range(base + 1, base + self._S):
            if hc[s] < hc[m]:
                m = s
        return m

    def _try_promote(self, g: int, counter: int) -> bool:
        """Move the lobby occupant of bucket ``g`` (counter ``counter``) into the heavy part.

        Returns True when the occupant ends up in the heavy part.
        """
        S = self._S
        L = self._L
        hfp = self._heavy_fp
        hc = self._heavy_c
        lfp = self._lobby_fp
        lc = self._lobby_c
        fp = lfp[g]
        base = g * S
        for s in range(base, base + S):
            if hfp[s] == 0:
                hfp[s] = fp
                hc[s] = counter
                lfp[g] = 0
                lc[g] = 0
                return True

        m = self._min_slot(base)
        c_min = hc[m]
        if c_min <= L or self._rng.random() < (counter - L) / (c_min - L):
            evicted_fp, evicted_c = hfp[m], c_min
            hfp[m] = fp
            hc[m] = max(c_min, counter)
            lfp[g] = 0
            lc[g] = 0
            self._kickout(evicted_fp, evicted_c, g)
            return True
        lc[g] = L
        return False

    def _kickout(self, fp: int, counter: int, g: int) -> None:
        """Relocate a displaced heavy entry that was evicted from bucket ``g``."""
        S = self._S
        hfp = self._heavy_fp
        hc = self._heavy_c
        floor = self._kick_phi * self._n
        for _ in range(self.config_.max_kicks):
            if counter < floor:
                self.kickout_drops_ += 1
                return
            g = self._alternate_bucket(g, fp)
            base = g * S
            for s in range(base, base + S):
                if hfp[s] == 0:
                    hfp[s] = fp
                    hc[s] = counter
                    return
            m = self._min_slot(base)
            fp, hfp[m] = hfp[m], fp
            counter, hc[m] = hc[m], counter
            self.kickout_swaps_ += 1
        self.kickout_drops_ += 1

    def f_query(self, item: int) -> int:
        """Heavy-part counter for ``item``, or 0. Lobby counters are not reported."""
        fp, g0, g1 = self._locate(check_item(item))
        S = self._S
        hfp = self._heavy_fp
        for base in (g0 * S, g1 * S):
            for s in range(base, base + S):
                if hfp[s] == fp:
                    return self._heavy_c[s]
        return 0

    def hh_query(self) -> HeavyHitterReport:
        threshold = self._phi * self._n
        self._heap.pop_below(threshold)
        return HeavyHitterReport(self._heap.items(), self._n)

    # -- inspection --------------------------------------------------------

    def bucket(self, table: int, index: int) -> dict:
        """Lobby and heavy entries of one bucket as plain ``(fp, counter)`` tuples."""
        g = table * self._B + index
        base = g * self._S
        return {
            "lobby": (self._lobby_fp[g], self._lobby_c[g]),
            "heavy": [(self._heavy_fp[s], self._heavy_c[s]) for s in range(base, base + self._S)],
        }

    def state(self) -> tuple:
        """Full internal state, for equality checks between sketches."""
        return (
            self._n,
            tuple(self._lobby_fp),
            tuple(self._lobby_c),
            tuple(self._heavy_fp),
            tuple(self._heavy_c),
            tuple(sorted(self._heap.items().items())),
            self._rng.getstate(),
        )

    def lobby_counters(self) -> list[int]:
        return list(self._lobby_c)


def heavy_part_bound(epsilon: float, buckets_per_table: int) -> float:
    """Probability bound ``1 / (epsilon * B)`` on an estimate erring by ``epsilon * N``."""
    return 1.0 / (epsilon * buckets_per_table)



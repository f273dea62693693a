from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from cuckoohh import (
    ConfigError,
    CuckooHeavyKeeper,
    ExactOracle,
    SketchConfig,
    ZipfSpec,
    gen_zipf,
    generate_fp_and_indexes,
    memory_to_config,
)
from cuckoohh.chk import bucket_bytes

MASK64 = (1 << 64) - 1


def fresh(**kw) -> CuckooHeavyKeeper:
    kw.setdefault("phi", 0.0005)
    return CuckooHeavyKeeper(**kw)


# -- configuration ------------------------------------------------------------


def test_default_bucket_fits_a_cache_line():
    assert bucket_bytes() == 15
    assert bucket_bytes() <= 64


@pytest.mark.parametrize("budget,expected", [(4096, 128), (1024, 32), (65536, 2048), (30, 1), (59, 1)])
def test_memory_to_config(budget, expected):
    assert memory_to_config(budget).buckets_per_table == expected


def test_memory_below_two_buckets_is_an_error():
    with pytest.raises(ConfigError):
        memory_to_config(29)


@pytest.mark.parametrize(
    "kw",
    [
        {"buckets_per_table": 100},
        {"decay_base": 1.0},
        {"phi": 0.0},
        {"phi": 1.0},
        {"heavy_slots": 0},
        {"max_kicks": 0},
    ],
)
def test_invalid_config_rejected(kw):
    with pytest.raises(ConfigError):
        SketchConfig(**kw)


def test_budget_and_bucket_count_are_exclusive():
    with pytest.raises(ConfigError):
        CuckooHeavyKeeper(memory_budget=4096, buckets_per_table=128)


def test_memory_bytes_reports_table_size():
    assert fresh(memory_budget=4096).memory_bytes == 2 * 128 * 15


# -- update / queries ---------------------------------------------------------


def test_early_placement_gives_exact_first_count():
    sk = fresh()
    assert sk.update(7, 100) == 100
    assert sk.f_query(7) == 100


def test_large_weight_promotes_without_early_placement():
    sk = fresh(early_placement=False)
    assert sk.update(7, 20) == 20
    assert sk.f_query(7) == 20
    fp, g0, g1 = generate_fp_and_indexes(7, sk.config_)
    assert sk.bucket(0, g0)["lobby"] == (0, 0)
    assert sk.bucket(1, g1)["lobby"] == (0, 0)


def test_small_weight_stays_in_lobby_without_early_placement():
    sk = fresh(early_placement=False)
    assert sk.update(7, 5) == 5
    assert sk.f_query(7) == 0  # lobby counts are not reported
    assert sk.update(7, 11) == 16
    assert sk.f_query(7) == 16


def test_distinct_heavy_items_are_exact_at_low_load():
    sk = fresh(buckets_per_table=64)
    oracle = ExactOracle()
    for i in range(1, 33):
        sk.update(i, 1000)
        oracle.update(i, 1000)
    assert all(sk.f_query(i) == oracle.f_query(i) for i in range(1, 33))


def test_never_inserted_item_reports_zero():
    sk = fresh()
    sk.update(1, 50)
    assert sk.f_query(2) == 0


def test_zero_weight_is_rejected():
    with pytest.raises(ValueError):
        fresh().update(1, 0)


@pytest.mark.parametrize("bad", [-1, 1 << 64])
def test_item_out_of_range_is_rejected(bad):
    with pytest.raises(ValueError):
        fresh().update(bad, 1)


def test_hh_query_on_fresh_sketch_is_empty():
    report = fresh().hh_query()
    assert len(report) == 0 and report.n_processed == 0


def test_hh_query_single_item():
    sk = fresh(phi=0.5)
    sk.update(3, 10)
    report = sk.hh_query()
    assert report.hitters == {3: 10}
    assert report.n_processed == 10


def test_hh_query_evicts_items_that_fell_below_threshold():
    sk = fresh(phi=0.5)
    sk.update(3, 10)
    sk.update(4, 30)
    assert sk.hh_query().hitters == {4: 30}


def test_zipf_estimates_on_heavy_part_are_close():
    items = gen_zipf(ZipfSpec(10_000, 1.2, 10_000, seed=1))
    sk = fresh(phi=0.005).fit(items)
    oracle = ExactOracle(phi=0.005).fit(items)
    n = sk.n_processed
    resident = [e for e in oracle.counts if sk.f_query(e) > 0]
    far = [e for e in resident if abs(sk.f_query(e) - oracle.f_query(e)) >= 0.001 * n]
    assert len(far) <= 0.05 * len(resident) + 1


def test_fit_resets_and_partial_fit_accumulates():
    sk = fresh()
    sk.partial_fit([1, 2, 3])
    sk.partial_fit([1])
    assert sk.n_processed == 4
    sk.fit([5])
    assert sk.n_processed == 1


def test_batched_ingest_matches_scalar_updates():
    items = gen_zipf(ZipfSpec(2000, 1.0, 20_000, seed=4))
    rng = random.Random(0)
    weights = [rng.randint(1, 40) for _ in range(items.size)]
    a = fresh(seed=3).fit(items, sample_weight=weights)
    b = fresh(seed=3)
    for e, w in zip(items.tolist(), weights):
        b.update(e, w)
    assert a.state() == b.state()


# -- promotion and kickout ----------------------------------------------------


def _fill_bucket(sk, g, counters, fp_start=100):
    S = sk.config_.heavy_slots
    for j, c in enumerate(counters):
        sk._heavy_fp[g * S + j] = fp_start + j
        sk._heavy_c[g * S + j] = c


def test_promote_moves_into_empty_slot():
    sk = fresh(buckets_per_table=8)
    sk._lobby_fp[3], sk._lobby_c[3] = 77, 16
    assert sk._try_promote(3, 16)
    assert sk.bucket(0, 3) == {"lobby": (0, 0), "heavy": [(77, 16), (0, 0)]}


def test_promote_at_threshold_against_larger_minimum_always_fails():
    sk = fresh(buckets_per_table=8)
    for trial in range(200):
        _fill_bucket(sk, 3, [50, 40])
        sk._lobby_fp[3], sk._lobby_c[3] = 77, 20
        assert not sk._try_promote(3, 16)
        assert sk.bucket(0, 3)["lobby"] == (77, 16)


def test_promote_with_counter_equal_to_minimum_always_succeeds():
    sk = fresh(buckets_per_table=8, kick_threshold=0.0)
    for trial in range(200):
        sk._reset()
        _fill_bucket(sk, 3, [50, 40])
        sk._lobby_fp[3], sk._lobby_c[3] = 77, 40
        assert sk._try_promote(3, 40)
        heavy = sk.bucket(0, 3)["heavy"]
        assert heavy[1] == (77, 40)
        assert sk.bucket(0, 3)["lobby"] == (0, 0)


def test_promote_probability_between_threshold_and_minimum():
    sk = fresh(buckets_per_table=8, kick_threshold=0.0)
    wins = 0
    trials = 20_000
    for _ in range(trials):
        _fill_bucket(sk, 3, [56, 56])
        sk._lobby_fp[3] = 77
        wins += sk._try_promote(3, 26)
        sk._lobby_fp[3] = sk._lobby_c[3] = 0
    p = (26 - 16) / (56 - 16)
    assert abs(wins / trials - p) <= 4 * (p * (1 - p) / trials) ** 0.5


def test_promote_is_deterministic_when_minimum_is_at_most_threshold():
    sk = fresh(buckets_per_table=8, kick_threshold=0.0)
    _fill_bucket(sk, 3, [10, 12])
    sk._lobby_fp[3] = 77
    assert sk._try_promote(3, 16)
    # lowest-count slot (index 0) is replaced
    assert sk.bucket(0, 3)["heavy"][0] == (77, 16)


def test_kickout_drops_entry_below_floor():
    sk = fresh(buckets_per_table=8, phi=0.1)
    sk._n = 1000
    sk._kickout(55, 99, 2)
    assert sk.kickout_drops_ == 1 and sk.kickout_swaps_ == 0
    assert all(fp != 55 for fp in sk._heavy_fp)


def test_kickout_places_entry_in_alternate_empty_slot():
    sk = fresh(buckets_per_table=8)
    sk._kickout(55, 99, 2)
    alt = sk._alternate_bucket(2, 55)
    S = sk.config_.heavy_slots
    assert (55, 99) in [(sk._heavy_fp[s], sk._heavy_c[s]) for s in range(alt * S, alt * S + S)]
    assert sk.kickout_swaps_ == 0


def test_kickout_stops_after_max_kicks_when_everything_is_full():
    sk = fresh(buckets_per_table=4, max_kicks=7, kick_threshold=0.0)
    S = sk.config_.heavy_slots
    for s in range(len(sk._heavy_fp)):
        sk._heavy_fp[s] = 1000 + s
        sk._heavy_c[s] = 500 + s
    sk._kickout(55, 10_000, 1)
    assert sk.kickout_swaps_ == 7
    assert sk.kickout_drops_ == 1
    assert len(sk._heavy_fp) == 2 * 4 * S


def test_kick_threshold_zero_disables_early_drop():
    sk = fresh(buckets_per_table=8, phi=0.1, kick_threshold=0.0)
    sk._n = 1000
    sk._kickout(55, 1, 2)
    assert sk.kickout_drops_ == 0


# -- properties ---------------------------------------------------------------

tuples = st.lists(
    st.tuples(st.integers(0, 300), st.integers(1, 60)), min_size=1, max_size=400
)


@settings(max_examples=60, deadline=None)
@given(stream=tuples, seed=st.integers(0, 1000), early=st.booleans())
def test_lobby_cap_and_weight_conservation(stream, seed, early):
    sk = fresh(buckets_per_table=4, seed=seed, early_placement=early, phi=0.01)
    total = 0
    for e, w in stream:
        sk.update(e, w)
        total += w
        assert max(sk.lobby_counters()) <= sk.config_.lobby_threshold
    assert sk.n_processed == total


@settings(max_examples=30, deadline=None)
@given(stream=tuples, seed=st.integers(0, 1000))
def test_identical_seed_and_stream_are_bit_identical(stream, seed):
    a = fresh(buckets_per_table=4, seed=seed)
    b = fresh(buckets_per_table=4, seed=seed)
    for e, w in stream:
        assert a.update(e, w) == b.update(e, w)
    assert a.state() == b.state()
    assert a.hh_query() == b.hh_query()


@settings(max_examples=40, deadline=None)
@given(
    items=st.lists(st.integers(0, MASK64), min_size=1, max_size=256, unique=True),
    reps=st.integers(1, 4),
    seed=st.integers(0, 1000),
)
def test_items_placed_without_contention_are_exact(items, reps, seed):
    # at most half the 512 heavy slots; only items that find a free slot in a
    # candidate bucket with no fingerprint clash are inserted (no contention)
    sk = fresh(buckets_per_table=128, seed=seed)
    placed = []
    for e in items:
        fp, i0, i1 = generate_fp_and_indexes(e, sk.config_)
        buckets = [sk.bucket(0, i0), sk.bucket(1, i1)]
        heavy = [h for b in buckets for h in b["heavy"]]
        lobbies = [b["lobby"][0] for b in buckets]
        if any(f == fp for f, _ in heavy) or fp in lobbies or all(f for f, _ in heavy):
            continue
        sk.update(e, 3)
        placed.append(e)
    for _ in range(reps - 1):
        for e in placed:
            sk.update(e, 3)
    assert len(placed) <= 256
    assert all(sk.f_query(e) == 3 * reps for e in placed)


def test_get_params_roundtrip():
    sk = fresh(memory_budget=1024, seed=9)
    params = sk.get_params()
    assert params["memory_budget"] == 1024 and params["seed"] == 9
    clone = CuckooHeavyKeeper(**params)
    assert clone.config_ == sk.config_

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cuckoohh import (
    ConfigError,
    CountMinSketch,
    CuckooHeavyKeeper,
    ExactOracle,
    SpaceSaving,
    ZipfSpec,
    gen_zipf,
)

A, B, C = 11, 22, 33


def test_empty_oracle_has_no_heavy_hitters():
    assert ExactOracle(phi=0.1).hh_query().hitters == {}


def test_oracle_threshold_is_inclusive():
    oracle = ExactOracle(phi=0.5)
    oracle.update(A, 3)
    oracle.update(B, 1)
    assert oracle.hh_query().hitters == {A: 3}
    assert oracle.heavy_hitters(phi=0.25) == {A: 3, B: 1}


def test_oracle_batch_and_scalar_agree():
    items = gen_zipf(ZipfSpec(500, 1.1, 5000, seed=2))
    weights = np.arange(1, items.size + 1) % 7 + 1
    batch = ExactOracle().fit(items, sample_weight=weights)
    scalar = ExactOracle()
    for e, w in zip(items.tolist(), weights.tolist()):
        scalar.update(e, w)
    assert batch.counts == scalar.counts
    assert batch.n_processed == int(weights.sum())


def test_space_saving_replaces_minimum():
    ss = SpaceSaving(phi=0.1, capacity=2)
    for e in (A, B, C):
        ss.update(e)
    assert ss.f_query(C) == 2
    assert ss.f_query(A) == 0
    assert ss.f_query(B) == 1


def test_space_saving_tracked_increment_is_exact():
    ss = SpaceSaving(phi=0.1, capacity=4)
    ss.update(A, 5)
    ss.update(A, 7)
    assert ss.f_query(A) == 12


def test_space_saving_capacity_from_budget():
    assert SpaceSaving(memory_budget=4096).capacity_ == 128
    with pytest.raises(ConfigError):
        SpaceSaving(memory_budget=16)


@settings(max_examples=50, deadline=None)
@given(stream=st.lists(st.tuples(st.integers(0, 50), st.integers(1, 20)), max_size=300),
       k=st.integers(1, 10))
def test_space_saving_overestimates(stream, k):
    ss = SpaceSaving(phi=0.1, capacity=k)
    oracle = ExactOracle()
    for e, w in stream:
        ss.update(e, w)
        oracle.update(e, w)
    for e in ss._summary.items():
        assert ss.f_query(e) >= oracle.f_query(e)
    assert len(ss._summary) <= k


def test_count_min_single_item_is_exact():
    cms = CountMinSketch(phi=0.1, width=64)
    cms.update(A, 9)
    assert cms.f_query(A) == 9


@settings(max_examples=50, deadline=None)
@given(stream=st.lists(st.tuples(st.integers(0, 500), st.integers(1, 20)), max_size=300))
def test_count_min_never_underestimates(stream):
    cms = CountMinSketch(phi=0.1, width=16, depth=3)
    oracle = ExactOracle()
    for e, w in stream:
        cms.update(e, w)
        oracle.update(e, w)
    for e in range(501):
        assert cms.f_query(e) >= oracle.f_query(e)


def test_count_min_error_bound():
    items = gen_zipf(ZipfSpec(100_000, 1.2, 200_000, seed=3))
    width, depth = 1024, 4
    cms = CountMinSketch(phi=0.001, width=width, depth=depth).fit(items)
    oracle = ExactOracle().fit(items)
    n = oracle.n_processed
    errors = np.array([cms.f_query(e) - f for e, f in oracle.counts.items()])
    frac = float(np.mean(errors >= math.e * n / width))
    assert frac <= 0.5**depth


def test_count_min_width_from_budget():
    assert CountMinSketch(memory_budget=4096, depth=4).width_ == 256


# -- interface conformance ---------------------------------------------------

FACTORIES = {
    "chk": lambda: CuckooHeavyKeeper(phi=0.01, memory_budget=1024, seed=1),
    "spacesaving": lambda: SpaceSaving(phi=0.01, memory_budget=1024),
    "countmin": lambda: CountMinSketch(phi=0.01, memory_budget=1024),
    "oracle": lambda: ExactOracle(phi=0.01),
}


@pytest.fixture(params=sorted(FACTORIES))
def sketch(request):
    return FACTORIES[request.param]()


@pytest.fixture(scope="module")
def stream():
    items = gen_zipf(ZipfSpec(5000, 1.2, 20_000, seed=8))
    weights = (np.arange(items.size) % 5 + 1).astype(np.int64)
    return items, weights


def test_conformance_weight_conservation(sketch, stream):
    items, weights = stream
    sketch.fit(items, sample_weight=weights)
    assert sketch.n_processed == int(weights.sum())


def test_conformance_estimates_are_non_negative(sketch, stream):
    items, weights = stream
    sketch.fit(items, sample_weight=weights)
    assert all(sketch.f_query(e) >= 0 for e in np.unique(items)[:500].tolist())
    assert (sketch.predict(items[:100]) >= 0).all()


def test_conformance_hh_query_matches_own_estimates(sketch, stream):
    items, weights = stream
    sketch.fit(items, sample_weight=weights)
    report = sketch.hh_query()
    threshold = sketch.phi * sketch.n_processed
    assert report.n_processed == sketch.n_processed
    for e, count in report.items():
        assert count >= threshold
        if isinstance(sketch, CountMinSketch):
            # heap entries hold the estimate at the item's last update
            assert count <= sketch.f_query(e)
        elif not isinstance(sketch, CuckooHeavyKeeper):
            assert count == sketch.f_query(e)


def test_conformance_memory_bytes(sketch):
    if isinstance(sketch, ExactOracle):
        return
    assert 0 < sketch.memory_bytes <= 1024


def test_conformance_rejects_bad_weights(sketch):
    with pytest.raises((TypeError, ValueError)):
        sketch.update(1, 0)
    with pytest.raises((TypeError, ValueError)):
        sketch.fit([1, 2], sample_weight=[1, -3])

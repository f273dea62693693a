"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numbers

import numpy as np

MAX_ITEM = (1 << 64) - 1
MAX_WEIGHT = (1 << 32) - 1


def check_weight(weight) -> int:
    if isinstance(weight, bool) or not isinstance(weight, numbers.Integral):
        raise TypeError(f"weight must be an integer, got {type(weight).__name__}")
    weight = int(weight)
    if weight < 1:
        raise ValueError(f"weight must be >= 1, got {weight}")
    if weight > MAX_WEIGHT:
        raise ValueError(f"weight must fit in 32 bits, got {weight}")
    return weight


def check_item(item) -> int:
    if isinstance(item, bool) or not isinstance(item, numbers.Integral):
        raise TypeError(f"item must be an unsigned 64-bit integer, got {type(item).__name__}")
    item = int(item)
    if not 0 <= item <= MAX_ITEM:
        raise ValueError(f"item out of unsigned 64-bit range: {item}")
    return item


def check_phi(phi) -> float:
    phi = float(phi)
    if not 0.0 < phi < 1.0:
        raise ValueError(f"phi must lie in (0, 1), got {phi}")
    return phi


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def check_stream(X, sample_weight=None) -> tuple[np.ndarray, np.ndarray]:
    """Coerce a stream of item ids (and optional weights) to aligned 1-d arrays.

    ``X`` may be a 1-d sequence of ids or an ``(n, 1)`` column, as sklearn
    pipelines tend to produce. Returns ``(items: uint64, weights: int64)``.
    """
    items = np.asarray(X)
    if items.ndim == 2 and items.shape[1] == 1:
        items = items[:, 0]
    if items.ndim != 1:
        raise ValueError(f"expected a 1-d stream of item ids, got shape {items.shape}")
    if items.size and items.dtype.kind not in "iu":
        raise TypeError(f"item ids must be integers, got dtype {items.dtype}")
    if items.dtype.kind == "i" and items.size and items.min() < 0:
        raise ValueError("item ids must be non-negative")
    items = items.astype(np.uint64, copy=False)

    if sample_weight is None:
        weights = np.ones(items.shape[0], dtype=np.int64)
    else:
        weights = np.asarray(sample_weight)
        if weights.shape != items.shape:
            raise ValueError(
                f"sample_weight shape {weights.shape} does not match stream shape {items.shape}"
            )
        if weights.size and weights.dtype.kind not in "iu":
            raise TypeError(f"weights must be integers, got dtype {weights.dtype}")
        weights = weights.astype(np.int64, copy=False)
        if weights.size and (weights.min() < 1 or weights.max() > MAX_WEIGHT):
            raise ValueError("weights must lie in [1, 2**32 - 1]")
    return items, weights

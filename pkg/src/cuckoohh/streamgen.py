"""Synthetic Zipf streams and the line-based stream file format.

Stream files hold one tuple per line, ``item_id`` or ``item_id weight``,
separated by whitespace; a missing weight means 1.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ._validation import MAX_ITEM, MAX_WEIGHT


class StreamFormatError(ValueError):
    def __init__(self, path, line: int, column: int, message: str):
        super().__init__(f"{path}:{line}:{column}: {message}")
        self.path = path
        self.line = line
        self.column = column


@dataclass(frozen=True)
class ZipfSpec:
    universe_size: int = 100_000
    skew_alpha: float = 1.2
    count_n: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if self.universe_size < 1:
            raise ValueError(f"universe_size must be >= 1, got {self.universe_size}")
        if self.skew_alpha < 0:
            raise ValueError(f"skew_alpha must be >= 0, got {self.skew_alpha}")
        if self.count_n < 0:
            raise ValueError(f"count_n must be >= 0, got {self.count_n}")


def zipf_probabilities(universe_size: int, skew_alpha: float) -> np.ndarray:
    """p(r) = r**-alpha / H for ranks r = 1..universe_size."""
    weights = np.arange(1, universe_size + 1, dtype=np.float64) ** -skew_alpha
    return weights / weights.sum()


def zipf_labels(spec: ZipfSpec) -> np.ndarray:
    """Item id of every rank: ``labels[r - 1]`` is the id of the rank-``r`` item."""
    rng = np.random.Generator(np.random.PCG64([spec.seed, 0x5A1F]))
    return rng.permutation(spec.universe_size).astype(np.uint64) + np.uint64(1)


def gen_zipf(spec: ZipfSpec) -> np.ndarray:
    """Draw ``count_n`` unit-weight items i.i.d. from a Zipf law.

    Sampling is inverse-CDF over the cumulative table; ranks are relabelled
    by a seeded permutation so item ids carry no rank order.
    """
    cdf = np.cumsum(zipf_probabilities(spec.universe_size, spec.skew_alpha))
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    ranks = np.searchsorted(cdf, rng.random(spec.count_n), side="right")
    np.minimum(ranks, spec.universe_size - 1, out=ranks)
    return zipf_labels(spec)[ranks]


def write_stream(path, items, weights=None) -> None:
    items = np.asarray(items, dtype=np.uint64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if weights is None:
            fh.writelines(f"{e}\n" for e in items.tolist())
        else:
            weights = np.asarray(weights, dtype=np.int64)
            if weights.shape != items.shape:
                raise ValueError("items and weights must have the same length")
            fh.writelines(f"{e} {w}\n" for e, w in zip(items.tolist(), weights.tolist()))


def _parse_uint(token: str, path, lineno: int, column: int, what: str, upper: int) -> int:
    if not token.isdigit():
        raise StreamFormatError(path, lineno, column, f"{what} is not an unsigned integer: {token!r}")
    value = int(token)
    if value > upper:
        raise StreamFormatError(path, lineno, column, f"{what} out of range: {token}")
    return value


def read_stream(path) -> tuple[np.ndarray, np.ndarray]:
    """Parse a stream file into ``(items: uint64, weights: int64)`` arrays.

    Blank lines are skipped. Raises :class:`StreamFormatError` naming the
    line and column of the first malformed tuple.
    """
    items: list[int] = []
    weights: list[int] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.rstrip("\r\n")
            tokens = text.split()
            if not tokens:
                continue
            if len(tokens) > 2:
                column = text.index(tokens[2]) + 1
                raise StreamFormatError(path, lineno, column, "expected 'item_id [weight]'")
            item_col = text.index(tokens[0]) + 1
            items.append(_parse_uint(tokens[0], path, lineno, item_col, "item id", MAX_ITEM))
            if len(tokens) == 2:
                w_col = text.index(tokens[1], item_col - 1 + len(tokens[0])) + 1
                w = _parse_uint(tokens[1], path, lineno, w_col, "weight", MAX_WEIGHT)
                if w < 1:
                    raise StreamFormatError(path, lineno, w_col, "weight must be >= 1")
                weights.append(w)
            else:
                weights.append(1)
    return np.array(items, dtype=np.uint64), np.array(weights, dtype=np.int64)


def load_or_generate(path: str | os.PathLike | None, spec: ZipfSpec) -> tuple[np.ndarray, np.ndarray]:
    if path is not None:
        return read_stream(path)
    items = gen_zipf(spec)
    return items, np.ones(items.shape[0], dtype=np.int64)

"""Common heavy-hitter sketch interface and the report type."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_stream


@dataclass(frozen=True)
class HeavyHitterReport:
    """Items reported as heavy, with their estimates and the stream size used."""

    hitters: dict[int, int] = field(default_factory=dict)
    n_processed: int = 0

    def __len__(self) -> int:
        return len(self.hitters)

    def __contains__(self, item) -> bool:
        return item in self.hitters

    def __iter__(self):
        return iter(self.hitters)

    def items(self):
        return self.hitters.items()


class HeavyHitterSketch(BaseEstimator):
    """Base class for streaming heavy-hitter estimators.

    Subclasses implement the streaming API (``update``, ``f_query``,
    ``hh_query``, ``n_processed``, ``memory_bytes``) and ``_reset``, which
    (re)builds the empty state from the constructor parameters. The sklearn
    surface is layered on top: ``fit`` restarts the stream, ``partial_fit``
    continues it, ``predict`` returns point estimates.

    Unlike most estimators the state is built eagerly in ``__init__`` so a
    fresh sketch accepts ``update`` calls straight away.
    """

    def update(self, item: int, weight: int = 1) -> int:
        raise NotImplementedError

    def f_query(self, item: int) -> int:
        raise NotImplementedError

    def hh_query(self) -> HeavyHitterReport:
        raise NotImplementedError

    @property
    def n_processed(self) -> int:
        raise NotImplementedError

    @property
    def memory_bytes(self) -> int:
        raise NotImplementedError

    def _reset(self) -> None:
        raise NotImplementedError

    def _ingest(self, items: np.ndarray, weights: np.ndarray) -> None:
        update = self.update
        for item, weight in zip(items.tolist(), weights.tolist()):
            update(item, weight)

    def fit(self, X, y=None, sample_weight=None):
        """Discard any state and consume the stream ``X``."""
        self._reset()
        return self.partial_fit(X, sample_weight=sample_weight)

    def partial_fit(self, X, y=None, sample_weight=None):
        items, weights = check_stream(X, sample_weight)
        self._ingest(items, weights)
        return self

    def predict(self, X) -> np.ndarray:
        items, _ = check_stream(X)
        f_query = self.f_query
        return np.array([f_query(e) for e in items.tolist()], dtype=np.int64)

    @property
    def heavy_hitters_(self) -> dict[int, int]:
        return dict(self.hh_query().hitters)

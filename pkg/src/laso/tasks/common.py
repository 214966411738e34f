"""Plumbing shared by the chunking and joint tasks."""

from __future__ import annotations

from typing import Callable, Hashable, Sequence

import numpy as np

from ..corpus import Sentence
from ..linalg import UNKNOWN, FeatureIndexer, SparseVector, WeightVector


class Prepared:
    """A sentence plus per-decode caches (token features, row ids, score tables)."""

    __slots__ = ("sentence", "values", "cache")

    def __init__(self, sentence: Sentence, values: list):
        self.sentence = sentence
        self.values = values
        self.cache: dict = {}

    def __len__(self) -> int:
        return len(self.sentence)

    def __hash__(self) -> int:
        return id(self)


class ConjunctionScorer:
    """Scores predicate lists against every context of a FeatureIndexer.

    ``rows`` maps a predicate list to indexer rows (skipping unknown ones),
    and ``table`` sums those weight rows into a vector over contexts.  Both
    are cached per input and invalidated when the indexer grows or the
    weights change.
    """

    indexer: FeatureIndexer

    def _rows(self, x: Prepared, key: Hashable, preds: Callable[[], Sequence[str]]) -> np.ndarray:
        n_rows = self.indexer.n_rows
        hit = x.cache.get(("rows", key))
        if hit is not None and hit[0] == n_rows:
            return hit[1]
        get = self.indexer.get
        rows = np.fromiter((r for r in map(get, preds()) if r != UNKNOWN), dtype=np.int64)
        x.cache[("rows", key)] = (n_rows, rows)
        return rows

    def _matrix(self, w: WeightVector) -> np.ndarray:
        nctx = self.indexer.n_contexts
        w.ensure_size(self.indexer.size)
        n_rows = w.size // nctx
        return w.raw[: n_rows * nctx].reshape(n_rows, nctx)

    def _table(self, x: Prepared, w: WeightVector, key: Hashable, preds: Callable[[], Sequence[str]]) -> np.ndarray:
        stamp = (w.uid, w.version, self.indexer.n_rows)
        hit = x.cache.get(("tab", key))
        if hit is not None and hit[0] == stamp:
            return hit[1]
        rows = self._rows(x, key, preds)
        W = self._matrix(w)
        vec = w.scale * W[rows].sum(axis=0) if len(rows) else np.zeros(self.indexer.n_contexts)
        x.cache[("tab", key)] = (stamp, vec)
        return vec

    def _row_vector(self, w: WeightVector, predicate: str) -> np.ndarray:
        row = self.indexer.get(predicate)
        if row == UNKNOWN:
            return np.zeros(self.indexer.n_contexts)
        return w.scale * self._matrix(w)[row]

    def _conjoin(self, preds: Sequence[str], contexts: Sequence[int]) -> SparseVector:
        ids = []
        fid = self.indexer.feature_id
        for p in preds:
            for c in contexts:
                ids.append(fid(p, c))
        return SparseVector.from_ids(ids)

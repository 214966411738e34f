"""Sparse feature vectors, dense weight vectors with averaging, and projection."""

from __future__ import annotations

import itertools
import logging
import math
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)

UNKNOWN = -1

_UIDS = itertools.count()


class SparseVector:
    """Immutable feature vector: strictly increasing ids, no stored zeros."""

    __slots__ = ("ids", "vals")

    def __init__(self, entries: Mapping[int, float] | Iterable[tuple[int, float]] = ()):
        acc: dict[int, float] = {}
        items = entries.items() if isinstance(entries, Mapping) else entries
        for i, v in items:
            if i < 0:
                raise ValueError(f"negative feature id {i}")
            acc[i] = acc.get(i, 0.0) + v
        keys = sorted(i for i, v in acc.items() if v != 0.0)
        self.ids: tuple[int, ...] = tuple(keys)
        self.vals: tuple[float, ...] = tuple(acc[i] for i in keys)

    @classmethod
    def _raw(cls, ids: tuple[int, ...], vals: tuple[float, ...]) -> "SparseVector":
        out = cls.__new__(cls)
        out.ids = ids
        out.vals = vals
        return out

    @classmethod
    def from_ids(cls, ids: Iterable[int]) -> "SparseVector":
        """Binary indicator vector; repeated ids count multiple times."""
        acc: dict[int, float] = {}
        for i in ids:
            if i >= 0:
                acc[i] = acc.get(i, 0.0) + 1.0
        keys = sorted(acc)
        return cls._raw(tuple(keys), tuple(acc[i] for i in keys))

    @classmethod
    def sum(cls, vectors: Iterable["SparseVector"], weight: float = 1.0) -> "SparseVector":
        acc: dict[int, float] = {}
        for vec in vectors:
            for i, v in zip(vec.ids, vec.vals):
                acc[i] = acc.get(i, 0.0) + weight * v
        return cls(acc)

    @classmethod
    def mean(cls, vectors: Sequence["SparseVector"]) -> "SparseVector":
        if not vectors:
            raise ValueError("mean of an empty list of vectors")
        return cls.sum(vectors, 1.0 / len(vectors))

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self) -> Iterator[tuple[int, float]]:
        return iter(zip(self.ids, self.vals))

    def items(self) -> list[tuple[int, float]]:
        return list(zip(self.ids, self.vals))

    def to_dict(self) -> dict[int, float]:
        return dict(zip(self.ids, self.vals))

    def get(self, i: int, default: float = 0.0) -> float:
        return self.to_dict().get(i, default)

    def __add__(self, other: "SparseVector") -> "SparseVector":
        if not other.ids:
            return self
        if not self.ids:
            return other
        acc = self.to_dict()
        for i, v in zip(other.ids, other.vals):
            acc[i] = acc.get(i, 0.0) + v
        return SparseVector(acc)

    def __neg__(self) -> "SparseVector":
        return SparseVector._raw(self.ids, tuple(-v for v in self.vals))

    def __sub__(self, other: "SparseVector") -> "SparseVector":
        return self + (-other)

    def __mul__(self, a: float) -> "SparseVector":
        if a == 0.0:
            return SparseVector()
        return SparseVector(zip(self.ids, (a * v for v in self.vals)))

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return self.ids == other.ids and self.vals == other.vals

    def __hash__(self) -> int:
        return hash((self.ids, self.vals))

    def dot(self, other: "SparseVector") -> float:
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        d = big.to_dict()
        return math.fsum(v * d.get(i, 0.0) for i, v in small)

    def norm(self) -> float:
        return math.sqrt(math.fsum(v * v for v in self.vals))

    def to_dense(self, size: int) -> np.ndarray:
        out = np.zeros(size)
        if self.ids:
            out[list(self.ids)] = self.vals
        return out

    def __repr__(self) -> str:
        body = ", ".join(f"{i}: {v:g}" for i, v in self)
        return f"SparseVector({{{body}}})"


class FeatureIndexer:
    """Exact mapping from observation predicates to rows of a conjunction table.

    Every feature is a predicate conjoined with one output context, so the
    full feature name is ``"<predicate>|<context>"`` and its id is
    ``row * n_contexts + context``.  The context alphabet is fixed at
    construction; predicates are added until ``freeze`` is called, after
    which unseen predicates map to ``UNKNOWN`` and score zero.
    """

    def __init__(self, contexts: Sequence[str] = ("",), predicates: Iterable[str] = ()):
        if not contexts:
            raise ValueError("at least one context is required")
        self.contexts: list[str] = list(contexts)
        self.context_ids: dict[str, int] = {c: i for i, c in enumerate(self.contexts)}
        if len(self.context_ids) != len(self.contexts):
            raise ValueError("duplicate context names")
        self.predicates: list[str] = []
        self.rows: dict[str, int] = {}
        self.frozen = False
        for p in predicates:
            self.index(p)

    @property
    def n_contexts(self) -> int:
        return len(self.contexts)

    @property
    def n_rows(self) -> int:
        return len(self.predicates)

    @property
    def size(self) -> int:
        return self.n_rows * self.n_contexts

    def freeze(self) -> None:
        self.frozen = True

    def get(self, predicate: str) -> int:
        return self.rows.get(predicate, UNKNOWN)

    def index(self, predicate: str) -> int:
        row = self.rows.get(predicate)
        if row is not None:
            return row
        if self.frozen:
            return UNKNOWN
        row = len(self.predicates)
        self.rows[predicate] = row
        self.predicates.append(predicate)
        return row

    def feature_id(self, predicate: str, context: int) -> int:
        row = self.index(predicate)
        return UNKNOWN if row == UNKNOWN else row * self.n_contexts + context

    def id_of(self, name: str) -> int:
        """Id of a full feature name ``predicate|context``."""
        predicate, _, context = name.rpartition("|")
        ctx = self.context_ids.get(context)
        if ctx is None:
            return UNKNOWN
        return self.feature_id(predicate, ctx)

    def name_of(self, fid: int) -> str:
        row, ctx = divmod(fid, self.n_contexts)
        return f"{self.predicates[row]}|{self.contexts[ctx]}"


class WeightVector:
    """Dense weights over the feature universe, stored as ``scale * raw``.

    The scalar multiplier lets the ALMA projection rescale in O(1).  The
    accumulator holds the running sum used for averaging; it is flushed
    lazily so an unchanged vector costs nothing per example.
    """

    def __init__(self, size: int = 0, values: np.ndarray | None = None):
        if values is not None:
            values = np.asarray(values, dtype=np.float64)
            size = len(values)
        self._raw = np.zeros(max(size, 16))
        if values is not None:
            self._raw[:size] = values
        self._acc = np.zeros_like(self._raw)
        self._scale = 1.0
        self._sq = float(self._raw @ self._raw)  # ||raw||^2
        self.size = size
        self.k = 1
        self.updates_seen = 0
        self.steps = 0
        self._pending = 0
        self.version = 0
        self.uid = next(_UIDS)
        self.frozen = False

    # -- reading -----------------------------------------------------------

    @property
    def scale(self) -> float:
        return self._scale

    @property
    def raw(self) -> np.ndarray:
        """Unscaled storage; callers multiply by ``scale``."""
        return self._raw

    @property
    def values(self) -> np.ndarray:
        return self._scale * self._raw[: self.size]

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, i: int) -> float:
        if 0 <= i < self.size:
            return self._scale * float(self._raw[i])
        return 0.0

    def norm(self) -> float:
        return abs(self._scale) * math.sqrt(max(self._sq, 0.0))

    def dot(self, v: SparseVector) -> float:
        return dot(self, v)

    # -- mutation ----------------------------------------------------------

    def _check_mutable(self) -> None:
        if self.frozen:
            raise RuntimeError("finalized weight vectors are read-only")

    def ensure_size(self, size: int) -> None:
        if size <= self.size:
            return
        if size > len(self._raw):
            cap = max(size, 2 * len(self._raw))
            raw = np.zeros(cap)
            raw[: self.size] = self._raw[: self.size]
            acc = np.zeros(cap)
            acc[: self.size] = self._acc[: self.size]
            self._raw, self._acc = raw, acc
        self.size = size

    def _flush(self) -> None:
        if self._pending:
            n = self.size
            self._acc[:n] += self._pending * self._scale * self._raw[:n]
            self._pending = 0

    def add(self, v: SparseVector, a: float = 1.0) -> None:
        """In-place ``w += a * v``."""
        self._check_mutable()
        if not v.ids:
            return
        self._flush()
        self.ensure_size(v.ids[-1] + 1)
        ids = np.fromiter(v.ids, dtype=np.int64, count=len(v))
        d = (a / self._scale) * np.fromiter(v.vals, dtype=np.float64, count=len(v))
        old = self._raw[ids]
        self._sq += float(2.0 * (old @ d) + d @ d)
        self._raw[ids] = old + d
        self.version += 1

    def rescale(self, factor: float) -> None:
        """In-place ``w *= factor`` in O(1)."""
        self._check_mutable()
        if factor == 1.0:
            return
        if factor == 0.0:
            self._flush()
            self._raw[:] = 0.0
            self._sq = 0.0
            self._scale = 1.0
        else:
            self._flush()
            self._scale *= factor
            if abs(self._scale) < 1e-100 or abs(self._scale) > 1e100:
                self._renormalize()
        self.version += 1

    def _renormalize(self) -> None:
        self._raw[: self.size] *= self._scale
        self._scale = 1.0
        self._sq = float(self._raw[: self.size] @ self._raw[: self.size])

    def resync_norm(self) -> None:
        """Recompute the tracked squared norm exactly (drift control)."""
        r = self._raw[: self.size]
        self._sq = float(r @ r)

    def next_generation(self) -> None:
        self.k += 1
        self.updates_seen += 1

    def tick(self) -> None:
        """Record one accumulation step (one training example processed)."""
        self.steps += 1
        self._pending += 1

    # -- averaging ---------------------------------------------------------

    def accumulator(self) -> np.ndarray:
        self._flush()
        return self._acc[: self.size].copy()

    def finalize_averaged(self) -> "WeightVector":
        return accumulate_and_finalize(self)

    def copy(self) -> "WeightVector":
        out = WeightVector(values=self.values)
        out.k = self.k
        out.updates_seen = self.updates_seen
        return out


def dot(w: WeightVector, v: SparseVector) -> float:
    """``w . v``; ids outside the weight range contribute zero."""
    if not v.ids:
        return 0.0
    raw = w.raw
    n = w.size
    total = 0.0
    for i, x in zip(v.ids, v.vals):
        if i < n:
            total += raw[i] * x
    return float(w.scale * total)


def project_unit(u):
    """Project onto the l2 unit ball: ``u / max(1, ||u||)``.

    Accepts a numpy array or a SparseVector and returns the same kind.
    """
    if isinstance(u, SparseVector):
        n = u.norm()
        return u if n <= 1.0 else u * (1.0 / n)
    u = np.asarray(u, dtype=np.float64)
    n = float(np.linalg.norm(u))
    return u if n <= 1.0 else u / n


def project_weights(w: WeightVector) -> None:
    """In-place unit-ball projection of a weight vector."""
    n = w.norm()
    if n > 1.0:
        w.rescale(1.0 / n)


def accumulate_and_finalize(w: WeightVector) -> WeightVector:
    """Average of the weight vector over all accumulation steps.

    The raw vector ``w`` is left untouched.  With no recorded steps the raw
    weights are returned (with a warning).
    """
    if w.steps == 0:
        log.warning("no accumulation steps recorded; using raw weights")
        out = WeightVector(values=w.values)
    else:
        out = WeightVector(values=w.accumulator() / w.steps)
    out.k = w.k
    out.updates_seen = w.updates_seen
    out.steps = w.steps
    out.frozen = True
    return out

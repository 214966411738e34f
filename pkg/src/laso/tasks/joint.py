"""Joint POS tagging and BIO chunking, one word at a time.

Each operator assigns a (POS, BIO) pair to the next word; I-X may only
follow B-X or I-X.  Observation predicates of the position are conjoined
with the POS tag, the BIO tag and (when seen in training) the pair; the
previous POS and previous BIO tag are conjoined with the new POS and BIO
tag respectively.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..corpus import Sentence
from ..linalg import FeatureIndexer, SparseVector, WeightVector
from ..search import TaskDefinition
from .common import ConjunctionScorer, Prepared
from .features import FeatureTemplateConfig, resolve_gazetteers, token_values, window_predicates


class JointTask(TaskDefinition, ConjunctionScorer):
    name = "joint"

    def __init__(self, pos_tags: Sequence[str], chunk_types: Sequence[str],
                 config: FeatureTemplateConfig | None = None, pairs: Sequence[tuple[str, str]] | None = None,
                 indexer: FeatureIndexer | None = None, gazetteers: dict | None = None):
        self.pos_tags = list(pos_tags)
        self.chunk_types = list(chunk_types)
        self.bio_tags = ["O"] + [f"B-{t}" for t in self.chunk_types] + [f"I-{t}" for t in self.chunk_types]
        self.config = config or FeatureTemplateConfig()
        self.pos_index = {p: i for i, p in enumerate(self.pos_tags)}
        self.bio_index = {b: i for i, b in enumerate(self.bio_tags)}
        if pairs is None:
            pairs = [(p, b) for p in self.pos_tags for b in self.bio_tags]
        self.pairs = [tuple(pb) for pb in pairs]
        npos, nbio = len(self.pos_tags), len(self.bio_tags)
        self.contexts = ([f"P:{p}" for p in self.pos_tags] + [f"C:{b}" for b in self.bio_tags]
                         + [f"PC:{p}/{b}" for p, b in self.pairs])
        self.indexer = indexer or FeatureIndexer(self.contexts)
        if self.indexer.contexts != self.contexts:
            raise ValueError("indexer contexts do not match the tag sets")
        # pair context per (pos, bio); -1 means "no pair feature"
        self._pair_ctx = np.full((npos, nbio), -1, dtype=np.int64)
        for j, (p, b) in enumerate(self.pairs):
            self._pair_ctx[self.pos_index[p], self.bio_index[b]] = npos + nbio + j
        self.gazetteers = resolve_gazetteers(self.config) if gazetteers is None else gazetteers
        self._acts: dict[Optional[int], tuple] = {}

    @classmethod
    def from_corpus(cls, sentences: Sequence[Sentence], config: FeatureTemplateConfig | None = None) -> "JointTask":
        pos = sorted({p for s in sentences for p in s.pos})
        types = sorted({c[2:] for s in sentences for c in s.chunks if c != "O"})
        pairs = sorted({(p, c) for s in sentences for p, c in zip(s.pos, s.chunks)})
        return cls(pos, types, config, pairs)

    @property
    def n_features(self) -> int:
        return self.indexer.size

    # -- inputs and outputs ---------------------------------------------------

    def prepare(self, x):
        if isinstance(x, Prepared):
            return x
        values = [token_values(w, None, self.config, self.gazetteers) for w in x.tokens]
        return Prepared(x, values)

    def example(self, sentence: Sentence) -> tuple[Sentence, tuple]:
        try:
            y = tuple((self.pos_index[p], self.bio_index[c]) for p, c in zip(sentence.pos, sentence.chunks))
        except KeyError as exc:
            raise ValueError(f"tag {exc.args[0]!r} not in the task's inventory") from None
        prev = None
        for _, b in y:
            if b not in self._legal(prev):
                raise ValueError("gold chunk tags violate the BIO constraint")
            prev = b
        return sentence, y

    def output(self, x, state) -> Sentence:
        sent = x.sentence if isinstance(x, Prepared) else x
        return Sentence(list(sent.tokens), [self.pos_tags[p] for p, _ in state],
                        [self.bio_tags[b] for _, b in state])

    # -- search space ----------------------------------------------------------

    def _legal(self, prev: Optional[int]) -> list[int]:
        """BIO tags allowed after ``prev`` (None at sentence start)."""
        nt = len(self.chunk_types)
        legal = list(range(1 + nt))  # O and every B-X
        if prev is not None and prev > 0:
            t = (prev - 1) % nt
            legal.append(1 + nt + t)
        return legal

    def _action_set(self, prev: Optional[int]) -> tuple:
        hit = self._acts.get(prev)
        if hit is None:
            legal = self._legal(prev)
            acts = [(p, b) for p in range(len(self.pos_tags)) for b in legal]
            ap = np.array([a[0] for a in acts], dtype=np.int64)
            ab = np.array([a[1] for a in acts], dtype=np.int64)
            npos = len(self.pos_tags)
            pc = self._pair_ctx[ap, ab]
            pc = np.where(pc < 0, len(self.contexts), pc)
            index = {a: i for i, a in enumerate(acts)}
            hit = (acts, ap, npos + ab, pc, index)
            self._acts[prev] = hit
        return hit

    @staticmethod
    def _prev(state) -> Optional[int]:
        return state[-1][1] if state else None

    def initial_state(self, x):
        return ()

    def actions(self, x, state):
        if len(state) >= len(x):
            return []
        return self._action_set(self._prev(state))[0]

    def apply(self, x, state, action):
        return state + (tuple(action),)

    def is_goal(self, x, state):
        return len(state) == len(x)

    def is_good(self, x, state, y):
        return tuple(state) == tuple(y[: len(state)])

    def good_action_indices(self, x, state, y):
        i = len(state)
        if i >= len(y) or not self.is_good(x, state, y):
            return []
        idx = self._action_set(self._prev(state))[4].get(y[i])
        return [] if idx is None else [idx]

    # -- features --------------------------------------------------------------

    def _preds(self, x: Prepared, i: int) -> list[str]:
        key = ("pos", i)
        preds = x.cache.get(key)
        if preds is None:
            preds = window_predicates(x.values, x.sentence.tokens, i, self.config)
            x.cache[key] = preds
        return preds

    def _prev_preds(self, state) -> tuple[str, str]:
        if not state:
            return "pp|<s>", "pb|<s>"
        p, b = state[-1]
        return f"pp|{self.pos_tags[p]}", f"pb|{self.bio_tags[b]}"

    def action_features(self, x, state, action) -> SparseVector:
        x = self.prepare(x)
        p, b = action
        npos = len(self.pos_tags)
        ctxs = [p, npos + b]
        pc = int(self._pair_ctx[p, b])
        if pc >= 0:
            ctxs.append(pc)
        preds = self._preds(x, len(state))
        pp, pb = self._prev_preds(state)
        fid = self.indexer.feature_id
        ids = [fid(q, c) for q in preds for c in ctxs]
        ids.append(fid(pp, p))
        ids.append(fid(pb, npos + b))
        return SparseVector.from_ids(ids)

    def action_scores(self, x, state, w: WeightVector) -> np.ndarray:
        # scores depend on the state only through its length and last pair
        x = self.prepare(x)
        i = len(state)
        key = ("sc", i, state[-1] if state else None)
        stamp = (w.uid, w.version, self.indexer.n_rows)
        hit = x.cache.get(key)
        if hit is not None and hit[0] == stamp:
            return hit[1]
        _, ap, ab, pc, _ = self._action_set(self._prev(state))
        R = self._table(x, w, ("pos", i), lambda: self._preds(x, i))
        R = np.append(R, 0.0)
        pp, pb = self._prev_preds(state)
        scores = R[ap] + R[ab] + R[pc]
        scores += self._row_vector(w, pp)[ap]
        scores += self._row_vector(w, pb)[ab]
        x.cache[key] = (stamp, scores)
        return scores

    # -- persistence -----------------------------------------------------------

    def header(self) -> dict:
        return {
            "task": self.name,
            "pos_tags": self.pos_tags,
            "chunk_types": self.chunk_types,
            "pairs": [list(p) for p in self.pairs],
            "config": self.config.to_dict(),
            "gazetteers": {k: sorted(v) for k, v in sorted(self.gazetteers.items())},
        }

    @classmethod
    def from_header(cls, header: dict, indexer: Optional[FeatureIndexer] = None) -> "JointTask":
        config = FeatureTemplateConfig.from_dict(header["config"])
        gaz = {k: frozenset(v) for k, v in header.get("gazetteers", {}).items()}
        return cls(header["pos_tags"], header["chunk_types"], config,
                   [tuple(p) for p in header["pairs"]], indexer, gaz)

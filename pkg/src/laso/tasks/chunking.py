"""Semi-Markov chunking: each operator appends one whole labeled chunk.

A state is a segmentation of a prefix of the sentence.  Tokens outside any
chunk are covered by unit-length ``O`` chunks, so every state tiles its
prefix.  Features are meta features of the hypothesized chunk conjoined
with its label, plus the previous-label/label pair.
"""

from __future__ import annotations

from typing import NamedTuple, Optional, Sequence

import numpy as np

from ..corpus import ChunkSpan, Sentence, bio_from_spans
from ..linalg import FeatureIndexer, SparseVector, WeightVector
from ..search import TaskDefinition
from .common import ConjunctionScorer, Prepared
from .features import FeatureTemplateConfig, meta_predicates, resolve_gazetteers, token_values

OUTSIDE = "O"


class ChunkState(NamedTuple):
    covered: int
    spans: tuple  # ((start, end, label), ...)


def gold_tiling(sentence: Sentence) -> tuple:
    """Gold chunks in order with unit ``O`` spans filling the gaps."""
    out = []
    pos = 0
    for s in sentence.spans:
        while pos < s.start:
            out.append((pos, pos + 1, OUTSIDE))
            pos += 1
        out.append((s.start, s.end, s.label))
        pos = s.end
    while pos < len(sentence):
        out.append((pos, pos + 1, OUTSIDE))
        pos += 1
    return tuple(out)


class ChunkingTask(TaskDefinition, ConjunctionScorer):
    name = "chunk"

    def __init__(self, labels: Sequence[str], config: FeatureTemplateConfig | None = None,
                 indexer: FeatureIndexer | None = None, gazetteers: dict | None = None):
        self.labels = [l for l in labels if l != OUTSIDE]
        self.config = config or FeatureTemplateConfig()
        self.contexts = self.labels + [OUTSIDE]
        self.outside = len(self.labels)
        self.label_index = {l: i for i, l in enumerate(self.contexts)}
        self.indexer = indexer or FeatureIndexer(self.contexts)
        if self.indexer.contexts != self.contexts:
            raise ValueError("indexer contexts do not match the label set")
        self.gazetteers = resolve_gazetteers(self.config) if gazetteers is None else gazetteers
        self._acts: dict[int, list] = {}

    @classmethod
    def from_corpus(cls, sentences: Sequence[Sentence], config: FeatureTemplateConfig | None = None) -> "ChunkingTask":
        labels = sorted({s.label for sent in sentences for s in sent.spans})
        task = cls(labels, config)
        longest = max((s.end - s.start for sent in sentences for s in sent.spans), default=0)
        if longest > task.config.max_chunk_length:
            raise ValueError(f"gold chunk of length {longest} exceeds max_chunk_length "
                             f"{task.config.max_chunk_length}")
        return task

    @property
    def n_features(self) -> int:
        return self.indexer.size

    # -- inputs and outputs ---------------------------------------------------

    def prepare(self, x):
        if isinstance(x, Prepared):
            return x
        values = [token_values(w, p, self.config, self.gazetteers) for w, p in zip(x.tokens, x.pos)]
        return Prepared(x, values)

    def example(self, sentence: Sentence) -> tuple[Sentence, tuple]:
        y = gold_tiling(sentence)
        for s, e, lab in y:
            if lab not in self.label_index:
                raise ValueError(f"unknown chunk label {lab!r}")
            if e - s > self.config.max_chunk_length:
                raise ValueError(f"gold chunk longer than max_chunk_length: {(s, e, lab)}")
        return sentence, y

    def output(self, x, state: ChunkState) -> Sentence:
        sent = x.sentence if isinstance(x, Prepared) else x
        spans = [ChunkSpan(s, e, l) for s, e, l in state.spans if l != OUTSIDE]
        return Sentence(list(sent.tokens), list(sent.pos), bio_from_spans(spans, len(sent)))

    # -- search space ----------------------------------------------------------

    def initial_state(self, x):
        return ChunkState(0, ())

    def _actions_for(self, max_len: int) -> list:
        acts = self._acts.get(max_len)
        if acts is None:
            acts = [(1, self.outside)]
            acts += [(l, c) for l in range(1, max_len + 1) for c in range(len(self.labels))]
            self._acts[max_len] = acts
        return acts

    def actions(self, x, state):
        rem = len(x) - state.covered
        if rem <= 0:
            return []
        return self._actions_for(min(self.config.max_chunk_length, rem))

    def apply(self, x, state, action):
        length, c = action
        start = state.covered
        return ChunkState(start + length, state.spans + ((start, start + length, self.contexts[c]),))

    def is_goal(self, x, state):
        return state.covered == len(x)

    def is_good(self, x, state, y):
        return state.spans == tuple(y[: len(state.spans)])

    def good_action_indices(self, x, state, y):
        k = len(state.spans)
        if k >= len(y) or not self.is_good(x, state, y):
            return []
        s, e, lab = y[k]
        c = self.label_index[lab]
        if c == self.outside:
            return [0] if e - s == 1 else []
        return [1 + (e - s - 1) * len(self.labels) + c]

    # -- features --------------------------------------------------------------

    def _span_preds(self, x: Prepared, start: int, length: int) -> list[str]:
        key = ("span", start, length)
        preds = x.cache.get(key)
        if preds is None:
            preds = meta_predicates(x.values, start, start + length, self.config)
            x.cache[key] = preds
        return preds

    @staticmethod
    def _prev_pred(state: ChunkState) -> str:
        return f"prev|{state.spans[-1][2] if state.spans else '<s>'}"

    def action_features(self, x, state, action) -> SparseVector:
        x = self.prepare(x)
        length, c = action
        preds = self._span_preds(x, state.covered, length) + [self._prev_pred(state)]
        return self._conjoin(preds, (c,))

    def action_scores(self, x, state, w: WeightVector) -> np.ndarray:
        # scores depend on the state only through its coverage and last label
        x = self.prepare(x)
        start = state.covered
        key = ("sc", start, state.spans[-1][2] if state.spans else None)
        stamp = (w.uid, w.version, self.indexer.n_rows)
        hit = x.cache.get(key)
        if hit is not None and hit[0] == stamp:
            return hit[1]
        max_len = min(self.config.max_chunk_length, len(x) - start)
        T = self._row_vector(w, self._prev_pred(state))
        M = np.stack([
            self._table(x, w, ("span", start, l), lambda l=l: self._span_preds(x, start, l))
            for l in range(1, max_len + 1)
        ])
        n_lab = len(self.labels)
        first = M[0, self.outside] + T[self.outside]
        rest = (M[:, :n_lab] + T[:n_lab]).ravel()
        scores = np.concatenate(([first], rest))
        x.cache[key] = (stamp, scores)
        return scores

    # -- persistence -----------------------------------------------------------

    def header(self) -> dict:
        return {
            "task": self.name,
            "labels": self.labels,
            "config": self.config.to_dict(),
            "gazetteers": {k: sorted(v) for k, v in sorted(self.gazetteers.items())},
        }

    @classmethod
    def from_header(cls, header: dict, indexer: Optional[FeatureIndexer] = None) -> "ChunkingTask":
        config = FeatureTemplateConfig.from_dict(header["config"])
        gaz = {k: frozenset(v) for k, v in header.get("gazetteers", {}).items()}
        return cls(header["labels"], config, indexer, gaz)

"""Synthetic sequence labeling with a known separating weight vector.

Each position carries an observation vector ``o``; labeling it ``l`` adds
``o`` to the feature block of label ``l``.  Gold labels are the per-position
argmax under a random unit vector ``w*`` whose winning gap is at least
``min_gap`` everywhere, so ``w*`` separates the data under any beam.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..linalg import SparseVector, WeightVector
from ..search import TaskDefinition


@dataclass(frozen=True)
class SyntheticInput:
    obs: np.ndarray  # (length, obs_dim)

    def __len__(self) -> int:
        return len(self.obs)

    def __hash__(self) -> int:
        return id(self)


class SyntheticTask(TaskDefinition):
    def __init__(self, n_labels: int = 3, obs_dim: int = 6):
        self.n_labels = n_labels
        self.obs_dim = obs_dim
        self._acts = list(range(n_labels))

    @property
    def n_features(self) -> int:
        return self.n_labels * self.obs_dim

    def initial_state(self, x):
        return ()

    def actions(self, x, state):
        return self._acts if len(state) < len(x) else []

    def apply(self, x, state, action):
        return state + (action,)

    def action_features(self, x, state, action):
        o = x.obs[len(state)]
        base = action * self.obs_dim
        return SparseVector((base + j, float(v)) for j, v in enumerate(o) if v != 0.0)

    def action_scores(self, x, state, w: WeightVector):
        w.ensure_size(self.n_features)
        W = w.raw[: self.n_features].reshape(self.n_labels, self.obs_dim)
        return w.scale * (W @ x.obs[len(state)])

    def is_goal(self, x, state):
        return len(state) == len(x)

    def is_good(self, x, state, y):
        return tuple(state) == tuple(y[: len(state)])

    def good_action_indices(self, x, state, y):
        return [] if len(state) >= len(y) else [y[len(state)]]


def make_separable_dataset(seed: int, n_seqs: int = 50, max_len: int = 10, n_labels: int = 3,
                           obs_dim: int = 6, min_gap: float = 0.05, norm_range: tuple = (0.35, 0.7)):
    """Return ``(task, data, w_star)`` with ``data = [(x, y), ...]``.

    Observation norms are drawn from ``norm_range``; the default keeps every
    one-step feature difference inside the unit ball.
    """
    rng = np.random.default_rng(seed)
    task = SyntheticTask(n_labels, obs_dim)
    w_star = rng.standard_normal(task.n_features)
    w_star /= np.linalg.norm(w_star)
    W = w_star.reshape(n_labels, obs_dim)
    data = []
    for _ in range(n_seqs):
        length = int(rng.integers(1, max_len + 1))
        obs = np.empty((length, obs_dim))
        labels = []
        for i in range(length):
            while True:
                o = rng.standard_normal(obs_dim)
                o *= rng.uniform(*norm_range) / np.linalg.norm(o)
                s = W @ o
                top = np.sort(s)[::-1]
                if top[0] - top[1] >= min_gap:
                    break
            obs[i] = o
            labels.append(int(np.argmax(s)))
        data.append((SyntheticInput(obs), tuple(labels)))
    return task, data, WeightVector(values=w_star)

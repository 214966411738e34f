"""Generic agenda-based search with a learned linear enqueue score.

The queue is a synchronized frontier: every node of the current frontier is
dequeued in score order (the first goal dequeued is returned), all
non-goal nodes are expanded, and the pooled children are cut down by the
enqueue policy to form the next frontier.

Both shipped search spaces are DAGs of strictly increasing depth, so no
visited set is kept.  Tasks with cyclic spaces must remember visited states
themselves.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Optional, Sequence

import numpy as np

from .linalg import SparseVector, WeightVector, dot

Heuristic = Callable[[Any, Any], float]


class TaskContractError(RuntimeError):
    """A task broke its contract (e.g. no successors for a non-goal state)."""


class SearchFailure(RuntimeError):
    """The queue emptied before any goal was dequeued."""


class TaskDefinition(abc.ABC):
    """A search problem over outputs for one input ``x``.

    Subclasses describe the space through *actions*: ``actions`` lists the
    operators applicable in a state, ``apply`` builds the successor and
    ``action_features`` gives the feature delta the operator adds to the
    path.  ``action_scores`` may be overridden with a vectorized version;
    it must equal ``w . action_features`` for every action.
    """

    #: when True a non-goal state may have no successors (a dead end)
    allow_dead_ends = False

    @abc.abstractmethod
    def initial_state(self, x) -> Hashable: ...

    @abc.abstractmethod
    def actions(self, x, state) -> Sequence[Any]: ...

    @abc.abstractmethod
    def apply(self, x, state, action) -> Hashable: ...

    @abc.abstractmethod
    def action_features(self, x, state, action) -> SparseVector: ...

    @abc.abstractmethod
    def is_goal(self, x, state) -> bool: ...

    @abc.abstractmethod
    def is_good(self, x, state, y) -> bool:
        """Whether the gold output ``y`` is still reachable from ``state``."""

    def initial_features(self, x) -> SparseVector:
        return SparseVector()

    def action_scores(self, x, state, w: WeightVector) -> np.ndarray:
        acts = self.actions(x, state)
        return np.array([dot(w, self.action_features(x, state, a)) for a in acts], dtype=np.float64)

    def good_action_indices(self, x, state, y) -> list[int]:
        acts = self.actions(x, state)
        return [i for i, a in enumerate(acts) if self.is_good(x, self.apply(x, state, a), y)]

    def good_successors(self, x, state, y) -> list:
        acts = self.actions(x, state)
        return [self.apply(x, state, acts[i]) for i in self.good_action_indices(x, state, y)]

    def expand(self, x, state) -> list[tuple[Any, SparseVector]]:
        return [(self.apply(x, state, a), self.action_features(x, state, a)) for a in self.actions(x, state)]

    def prepare(self, x):
        """Hook to attach per-input caches; returns the object passed as ``x``."""
        return x


class SearchNode:
    """A hypothesis on the queue.

    ``g`` is the path score under the weights current when the node was
    scored; ``good`` caches y-goodness when search runs against a gold output.
    """

    __slots__ = ("state", "parent", "action", "g", "h", "depth", "good", "_delta", "_phi")

    def __init__(self, state, parent=None, action=None, g=0.0, h=0.0, depth=0, good=None):
        self.state = state
        self.parent = parent
        self.action = action
        self.g = g
        self.h = h
        self.depth = depth
        self.good = good
        self._delta: Optional[SparseVector] = None
        self._phi: Optional[SparseVector] = None

    @property
    def score(self) -> float:
        return self.g + self.h

    def path(self) -> list["SearchNode"]:
        out = []
        node = self
        while node is not None:
            out.append(node)
            node = node.parent
        return out[::-1]

    def actions(self) -> list:
        return [n.action for n in self.path()[1:]]

    def delta(self, task: TaskDefinition, x) -> SparseVector:
        if self._delta is None:
            if self.parent is None:
                self._delta = task.initial_features(x)
            else:
                self._delta = task.action_features(x, self.parent.state, self.action)
        return self._delta

    def path_features(self, task: TaskDefinition, x) -> SparseVector:
        """Sum of feature deltas from the root to this node (cached)."""
        if self._phi is None:
            chain = []
            node = self
            while node is not None and node._phi is None:
                chain.append(node)
                node = node.parent
            acc = node._phi if node is not None else None
            for n in reversed(chain):
                d = n.delta(task, x)
                acc = d if acc is None else acc + d
                n._phi = acc
        return self._phi

    def __repr__(self) -> str:
        return f"SearchNode(depth={self.depth}, g={self.g:.4g}, good={self.good}, state={self.state!r})"


@dataclass(frozen=True)
class EnqueuePolicy:
    """Queue ordering: ``greedy``, ``beam`` (with width) or ``exhaustive``."""

    variant: str = "beam"
    width: Optional[int] = 1

    def __post_init__(self):
        if self.variant not in ("greedy", "beam", "exhaustive"):
            raise ValueError(f"unknown enqueue policy {self.variant!r}")
        if self.variant == "greedy" and self.width != 1:
            object.__setattr__(self, "width", 1)
        if self.variant == "beam" and (self.width is None or self.width < 1):
            raise ValueError("beam width must be a positive integer")
        if self.variant == "exhaustive":
            object.__setattr__(self, "width", None)

    @classmethod
    def greedy(cls) -> "EnqueuePolicy":
        return cls("greedy", 1)

    @classmethod
    def beam(cls, width: int) -> "EnqueuePolicy":
        return cls("beam", int(width))

    @classmethod
    def exhaustive(cls) -> "EnqueuePolicy":
        return cls("exhaustive", None)

    @classmethod
    def parse(cls, text: str | int) -> "EnqueuePolicy":
        t = str(text).strip().lower()
        if t == "greedy":
            return cls.greedy()
        if t in ("exhaustive", "inf", "all"):
            return cls.exhaustive()
        if t.startswith("beam:"):
            t = t[5:]
        return cls.beam(int(t))

    def __str__(self) -> str:
        return "exhaustive" if self.width is None else f"beam:{self.width}"


def stable_top(keys: np.ndarray, width: Optional[int]) -> np.ndarray:
    """Indices of the ``width`` largest keys, ties kept in insertion order."""
    order = np.argsort(-keys, kind="stable")
    return order if width is None else order[:width]


def enqueue(policy: EnqueuePolicy, queue: Sequence[SearchNode], new_nodes: Sequence[SearchNode],
            key: Callable[[SearchNode], float] = lambda n: n.score) -> list[SearchNode]:
    """Merge ``new_nodes`` behind ``queue`` and keep the policy's best nodes."""
    merged = list(queue) + list(new_nodes)
    if not merged:
        return []
    keys = np.array([key(n) for n in merged], dtype=np.float64)
    return [merged[i] for i in stable_top(keys, policy.width)]


def make_root(task: TaskDefinition, x, w: WeightVector, y=None, heuristic: Heuristic | None = None) -> SearchNode:
    state = task.initial_state(x)
    root = SearchNode(state, depth=0)
    root.g = dot(w, root.delta(task, x)) if w is not None else 0.0
    if heuristic is not None:
        root.h = float(heuristic(x, state))
    if y is not None:
        root.good = task.is_good(x, state, y)
    return root


def expand_and_score(node: SearchNode, task: TaskDefinition, x, w: WeightVector,
                     y=None, heuristic: Heuristic | None = None) -> list[SearchNode]:
    """All children of ``node``, scored incrementally from the parent."""
    rnd = Round.expand(task, x, w, [node], y=y, heuristic=heuristic)
    return [rnd.node(i) for i in range(rnd.size)]


class Round:
    """Pooled, scored children of a frontier; nodes are built on demand."""

    def __init__(self, task, x, parents, acts, offsets, g, h, good):
        self.task = task
        self.x = x
        self.parents = parents
        self.acts = acts
        self.offsets = offsets
        self.g = g
        self.h = h
        self.good = good
        self._built: dict[int, SearchNode] = {}

    @property
    def size(self) -> int:
        return len(self.g)

    @classmethod
    def expand(cls, task: TaskDefinition, x, w: WeightVector, nodes: Sequence[SearchNode],
               y=None, heuristic: Heuristic | None = None) -> "Round":
        parents, acts, scores, goods = [], [], [], []
        track = y is not None
        for node in nodes:
            a = task.actions(x, node.state)
            if len(a) == 0:
                if task.allow_dead_ends:
                    continue
                raise TaskContractError(f"non-goal state has no successors: {node.state!r}")
            s = task.action_scores(x, node.state, w)
            if len(s) != len(a):
                raise TaskContractError("action_scores length differs from actions")
            parents.append(node)
            acts.append(a)
            scores.append(node.g + s)
            if track:
                mask = np.zeros(len(a), dtype=bool)
                if node.good:
                    idx = task.good_action_indices(x, node.state, y)
                    if not idx and not task.is_goal(x, node.state):
                        raise TaskContractError(
                            f"y-good non-goal state has no y-good successor: {node.state!r}")
                    mask[idx] = True
                goods.append(mask)
        offsets = np.cumsum([0] + [len(a) for a in acts])
        g = np.concatenate(scores) if scores else np.zeros(0)
        good = np.concatenate(goods) if track and goods else (np.zeros(len(g), dtype=bool) if track else None)
        h = None
        rnd = cls(task, x, parents, acts, offsets, g, h, good)
        if heuristic is not None:
            rnd.h = np.array([heuristic(x, rnd.node(i).state) for i in range(rnd.size)], dtype=np.float64)
            for i, n in rnd._built.items():
                n.h = float(rnd.h[i])
        return rnd

    def keys(self, penalty: float = 0.0) -> np.ndarray:
        k = self.g if self.h is None else self.g + self.h
        if penalty and self.good is not None:
            k = k - penalty * self.good
        return k

    def node(self, i: int) -> SearchNode:
        n = self._built.get(i)
        if n is None:
            j = int(np.searchsorted(self.offsets, i, side="right")) - 1
            parent = self.parents[j]
            action = self.acts[j][i - self.offsets[j]]
            n = SearchNode(
                self.task.apply(self.x, parent.state, action),
                parent,
                action,
                float(self.g[i]),
                0.0 if self.h is None else float(self.h[i]),
                parent.depth + 1,
                None if self.good is None else bool(self.good[i]),
            )
            self._built[i] = n
        return n


class Frontier:
    """The sorted, pruned queue; nodes materialize lazily in dequeue order."""

    def __init__(self, rnd: Round | None = None, order: np.ndarray | None = None,
                 nodes: Sequence[SearchNode] | None = None):
        self._rnd = rnd
        self._order = order
        self._nodes = list(nodes) if nodes is not None else None

    @classmethod
    def of(cls, nodes: Sequence[SearchNode]) -> "Frontier":
        return cls(nodes=nodes)

    def __len__(self) -> int:
        return len(self._nodes) if self._nodes is not None else len(self._order)

    def __getitem__(self, i: int) -> SearchNode:
        if self._nodes is not None:
            return self._nodes[i]
        return self._rnd.node(int(self._order[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def any_good(self) -> bool:
        if self._nodes is not None:
            return any(n.good for n in self._nodes)
        return bool(self._rnd.good[self._order].any())

    def nodes(self) -> list[SearchNode]:
        return list(self)


def prune(rnd: Round, policy: EnqueuePolicy, penalty: float = 0.0) -> Frontier:
    return Frontier(rnd, stable_top(rnd.keys(penalty), policy.width))


def search(task: TaskDefinition, x, w: WeightVector, policy: EnqueuePolicy,
           heuristic: Heuristic | None = None) -> SearchNode:
    """Decode ``x``: return the first goal node dequeued.

    Raises ``SearchFailure`` if the queue empties and ``TaskContractError``
    if the task misbehaves.
    """
    x = task.prepare(x)
    frontier = Frontier.of([make_root(task, x, w, heuristic=heuristic)])
    while len(frontier):
        expandable = []
        for node in frontier:
            if task.is_goal(x, node.state):
                return node
            expandable.append(node)
        rnd = Round.expand(task, x, w, expandable, heuristic=heuristic)
        frontier = prune(rnd, policy)
    raise SearchFailure("queue emptied before reaching a goal")


def enumerate_outputs(task: TaskDefinition, x, limit: int = 1_000_000) -> list[list]:
    """Every complete action sequence, depth-first in action order.

    Test oracle for tiny inputs; raises if more than ``limit`` outputs exist.
    """
    out: list[list] = []

    def walk(state, prefix):
        if task.is_goal(x, state):
            out.append(list(prefix))
            if len(out) > limit:
                raise ValueError("too many outputs to enumerate")
            return
        for a in task.actions(x, state):
            prefix.append(a)
            walk(task.apply(x, state, a), prefix)
            prefix.pop()

    walk(task.initial_state(x), [])
    return out


def count_outputs(task: TaskDefinition, x) -> int:
    """Number of complete outputs, counted by memoized recursion on states."""
    memo: dict = {}

    def count(state) -> int:
        if state in memo:
            return memo[state]
        if task.is_goal(x, state):
            c = 1
        else:
            c = sum(count(task.apply(x, state, a)) for a in task.actions(x, state))
        memo[state] = c
        return c

    return count(task.initial_state(x))


__all__ = [
    "EnqueuePolicy",
    "Frontier",
    "Round",
    "SearchFailure",
    "SearchNode",
    "TaskContractError",
    "TaskDefinition",
    "enqueue",
    "enumerate_outputs",
    "count_outputs",
    "expand_and_score",
    "make_root",
    "prune",
    "search",
    "stable_top",
]

"""Online training interleaved with search: perceptron and ALMA updates.

An example is searched with the raw weights.  Whenever the queue loses
every y-good node, or a y-bad goal is dequeued, the weights are updated
toward the y-good siblings of the offending node, the queue is cleared and
search continues from those siblings.
"""

from __future__ import annotations

import json
import logging
import math
import random
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .linalg import SparseVector, WeightVector, accumulate_and_finalize, dot, project_unit, project_weights
from .search import (
    EnqueuePolicy,
    Frontier,
    Round,
    SearchNode,
    TaskContractError,
    TaskDefinition,
    make_root,
    prune,
)

log = logging.getLogger(__name__)

UPDATE_MODES = ("laso", "early_update", "end_only")
BAD_SETS = ("queue", "outranking")


def good_penalty(alpha: float, B: float, k: int) -> float:
    """Amount subtracted from every y-good node's score during ALMA training."""
    if k < 1:
        raise ValueError("generation k must be >= 1")
    return (1.0 - alpha) * B / math.sqrt(k)


@dataclass(frozen=True)
class UpdateRule:
    kind: str = "perceptron"
    alpha: float = 1.0
    B: Optional[float] = None
    C: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("perceptron", "alma"):
            raise ValueError(f"unknown update rule {self.kind!r}")
        if self.kind == "alma":
            if not 0.0 < self.alpha <= 1.0:
                raise ValueError("alpha must lie in (0, 1]")
            if self.B is None:
                object.__setattr__(self, "B", math.sqrt(8.0) / self.alpha)
            if self.C is None:
                object.__setattr__(self, "C", math.sqrt(2.0))
            if self.B <= 0 or self.C <= 0:
                raise ValueError("B and C must be positive")

    @classmethod
    def perceptron(cls) -> "UpdateRule":
        return cls("perceptron")

    @classmethod
    def alma(cls, alpha: float = 0.9, B: float | None = None, C: float | None = None) -> "UpdateRule":
        return cls("alma", alpha, B, C)

    @property
    def certified(self) -> bool:
        """True for the ALMA parameter pair covered by the mistake bound."""
        return (self.kind == "alma"
                and math.isclose(self.B, math.sqrt(8.0) / self.alpha, rel_tol=1e-12)
                and math.isclose(self.C, math.sqrt(2.0), rel_tol=1e-12))

    def penalty(self, k: int) -> float:
        if self.kind != "alma":
            return 0.0
        return good_penalty(self.alpha, self.B, k)

    def apply(self, w: WeightVector, delta: SparseVector) -> None:
        if self.kind == "alma":
            apply_alma(w, delta, self.C)
        else:
            apply_perceptron(w, delta)

    @property
    def tag(self) -> str:
        if self.kind == "perceptron":
            return "perceptron"
        return f"alma(alpha={self.alpha:g},B={self.B:.17g},C={self.C:.17g})"


@dataclass
class LearnerConfig:
    rule: UpdateRule = field(default_factory=UpdateRule.perceptron)
    policy: EnqueuePolicy = field(default_factory=lambda: EnqueuePolicy.beam(1))
    epochs: int = 1
    average: bool = True
    update_mode: str = "laso"
    bad_set: str = "queue"
    shuffle_seed: Optional[int] = None
    stop_on_convergence: bool = False

    def __post_init__(self):
        if self.update_mode not in UPDATE_MODES:
            raise ValueError(f"update_mode must be one of {UPDATE_MODES}")
        if self.bad_set not in BAD_SETS:
            raise ValueError(f"bad_set must be one of {BAD_SETS}")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class UpdateEvent:
    """What an update saw; passed to instrumentation hooks."""

    node: SearchNode
    siblings: list
    bad: list
    delta: SparseVector
    queue: list
    reason: str
    k_before: int


@dataclass
class MarginDiagnostics:
    gamma: float
    D: float
    scale: float = 1.0
    decisions: int = 0
    violations: int = 0


@dataclass
class TrainingReport:
    updates_made: int = 0
    examples_seen: int = 0
    per_epoch_updates: list = field(default_factory=list)
    empirical_margin: Optional[float] = None
    radius: Optional[float] = None
    bound_theorem1: Optional[float] = None
    bound_theorem4: Optional[float] = None
    wall_time: float = 0.0
    rule: str = "perceptron"
    policy: str = "beam:1"
    update_mode: str = "laso"
    epochs_run: int = 0
    converged: bool = False
    final_k: int = 1
    heldout_f: list = field(default_factory=list)
    best_epoch: Optional[int] = None

    def to_text(self) -> str:
        out = []
        for key, value in asdict(self).items():
            if isinstance(value, list):
                value = ",".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in value)
            elif value is None:
                value = "NA"
            elif isinstance(value, float):
                value = f"{value:.10g}"
            out.append(f"{key}={value}")
        return "\n".join(out) + "\n"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TrainingReport":
        return cls(**json.loads(text))


# -- update primitives -------------------------------------------------------


def perceptron_delta(task: TaskDefinition, x, sibs: Sequence[SearchNode], bad_nodes: Sequence[SearchNode]) -> SparseVector:
    """Mean path features of the siblings minus mean path features of the bad set."""
    if not sibs or not bad_nodes:
        raise ValueError("siblings and bad nodes must both be non-empty")
    good = SparseVector.mean([n.path_features(task, x) for n in sibs])
    bad = SparseVector.mean([n.path_features(task, x) for n in bad_nodes])
    return good - bad


def apply_perceptron(w: WeightVector, delta: SparseVector) -> None:
    w.add(delta)
    w.next_generation()


def apply_alma(w: WeightVector, delta: SparseVector, C: float = math.sqrt(2.0)) -> None:
    """``w <- proj(w + C k^-1/2 proj(delta))`` followed by ``k += 1``."""
    step = C / math.sqrt(w.k)
    w.add(project_unit(delta), step)
    if w.updates_seen % 1024 == 1023:
        w.resync_norm()
    project_weights(w)
    w.next_generation()


# -- search-time error handling -------------------------------------------------


def _is_good(node: SearchNode, task: TaskDefinition, x, y) -> bool:
    if node.good is None:
        node.good = bool(task.is_good(x, node.state, y))
    return node.good


def detect_error(queue: Sequence[SearchNode], node: SearchNode, y, task: TaskDefinition, x=None) -> bool:
    """True iff no node of ``queue`` or ``node`` is y-good, or ``node`` is a y-bad goal."""
    node_good = _is_good(node, task, x, y)
    if task.is_goal(x, node.state) and not node_good:
        return True
    return not node_good and not any(_is_good(n, task, x, y) for n in queue)


def siblings(node: SearchNode, y, task: TaskDefinition, x, w: WeightVector | None = None) -> list[SearchNode]:
    """The y-good nodes at ``node``'s depth.

    Back-traces to the nearest y-good ancestor and rolls forward through
    y-good successors only.  Returned nodes are scored under ``w``.
    """
    if _is_good(node, task, x, y):
        return [node]
    anc = node.parent
    while anc is not None and not _is_good(anc, task, x, y):
        anc = anc.parent
    if anc is None:
        raise TaskContractError("no y-good ancestor; the initial state must be y-good")
    layer = [anc]
    while layer and layer[0].depth < node.depth:
        nxt = []
        for n in layer:
            if task.is_goal(x, n.state):
                continue
            acts = task.actions(x, n.state)
            idx = task.good_action_indices(x, n.state, y)
            if not idx:
                raise TaskContractError(f"y-good non-goal state has no y-good successor: {n.state!r}")
            for i in idx:
                nxt.append(SearchNode(task.apply(x, n.state, acts[i]), n, acts[i], depth=n.depth + 1, good=True))
        layer = nxt
    if not layer:
        raise TaskContractError("gold path ends before the error depth")
    if w is not None:
        rescore(layer, task, x, w)
    return layer


def rescore(nodes: Sequence[SearchNode], task: TaskDefinition, x, w: WeightVector) -> None:
    for n in nodes:
        n.g = dot(w, n.path_features(task, x))


def gold_goal(task: TaskDefinition, x, y, w: WeightVector | None = None) -> SearchNode:
    """Follow the first y-good successor from the root to a goal."""
    node = make_root(task, x, w, y) if w is not None else SearchNode(task.initial_state(x), depth=0, good=True)
    while not task.is_goal(x, node.state):
        acts = task.actions(x, node.state)
        idx = task.good_action_indices(x, node.state, y)
        if not idx:
            raise TaskContractError(f"y-good non-goal state has no y-good successor: {node.state!r}")
        a = acts[idx[0]]
        node = SearchNode(task.apply(x, node.state, a), node, a, depth=node.depth + 1, good=True)
    if w is not None:
        rescore([node], task, x, w)
    return node


def learn_one(task: TaskDefinition, x, y, w: WeightVector, policy: EnqueuePolicy, rule: UpdateRule,
              mode: str = "laso", bad_set: str = "queue",
              on_update: Callable[[UpdateEvent], None] | None = None) -> tuple[WeightVector, int]:
    """Search ``x`` against gold ``y``, updating ``w`` in place on every error.

    Returns ``(w, number_of_updates)``.
    """
    x = task.prepare(x)
    root = make_root(task, x, w, y)
    if not root.good:
        raise TaskContractError("initial state is not y-good")
    if mode == "end_only":
        return w, _learn_end_only(task, x, y, w, policy, rule, root, on_update)

    updates = 0
    frontier = Frontier.of([root])
    while True:
        error = None
        if not frontier.any_good():
            error = (frontier[0], frontier.nodes(), "pruned")
        else:
            expandable = []
            for i, node in enumerate(frontier):
                if task.is_goal(x, node.state):
                    if node.good:
                        return w, updates
                    rest = [frontier[j] for j in range(i + 1, len(frontier))]
                    if bad_set == "outranking":
                        cut = next((j for j, m in enumerate(rest) if m.good), len(rest))
                        rest = rest[:cut]
                    error = (node, [node] + rest, "bad-goal")
                    break
                expandable.append(node)
        if error is not None:
            node, bad, reason = error
            sibs = siblings(node, y, task, x)
            delta = perceptron_delta(task, x, sibs, bad)
            k_before = w.k
            rule.apply(w, delta)
            updates += 1
            rescore(sibs, task, x, w)
            if on_update is not None:
                on_update(UpdateEvent(node, sibs, bad, delta, list(sibs), reason, k_before))
            if mode == "early_update":
                return w, updates
            frontier = Frontier.of(sorted(sibs, key=lambda n: -n.score))
            continue
        rnd = Round.expand(task, x, w, expandable, y=y)
        frontier = prune(rnd, policy, rule.penalty(w.k))


def _learn_end_only(task, x, y, w, policy, rule, root, on_update) -> int:
    frontier = Frontier.of([root])
    while True:
        goal = next((n for n in frontier if task.is_goal(x, n.state)), None)
        if goal is not None:
            break
        expandable = list(frontier)
        rnd = Round.expand(task, x, w, expandable, y=y)
        frontier = prune(rnd, policy, rule.penalty(w.k))
        if not len(frontier):
            raise TaskContractError("queue emptied during training search")
    if goal.good:
        return 0
    gold = gold_goal(task, x, y)
    delta = perceptron_delta(task, x, [gold], [goal])
    k_before = w.k
    rule.apply(w, delta)
    rescore([gold], task, x, w)
    if on_update is not None:
        on_update(UpdateEvent(goal, [gold], [goal], delta, [gold], "end", k_before))
    return 1


def train(task: TaskDefinition, dataset: Sequence, config: LearnerConfig, w: WeightVector | None = None,
          on_update: Callable[[UpdateEvent], None] | None = None,
          on_epoch: Callable[[int, WeightVector, TrainingReport], None] | None = None,
          ) -> tuple[WeightVector, TrainingReport]:
    """Epoch loop over ``learn_one``; returns (decode weights, report).

    ``dataset`` holds ``(x, y)`` pairs.  ``w`` (raw weights) is updated in
    place when supplied.  Decode weights are the average of the raw vector
    taken once per example, or a frozen copy of the raw vector when
    averaging is off.
    """
    if not dataset:
        raise ValueError("empty training set")
    if w is None:
        w = WeightVector(getattr(task, "n_features", 0))
    report = TrainingReport(rule=config.rule.tag, policy=str(config.policy), update_mode=config.update_mode)
    order = list(range(len(dataset)))
    rng = random.Random(config.shuffle_seed) if config.shuffle_seed is not None else None
    t0 = time.perf_counter()
    for epoch in range(config.epochs):
        if rng is not None:
            rng.shuffle(order)
        ups = 0
        for idx in order:
            x, y = dataset[idx]
            try:
                _, u = learn_one(task, x, y, w, config.policy, config.rule, config.update_mode,
                                 config.bad_set, on_update)
            except TaskContractError as exc:
                raise TaskContractError(f"training example {idx}: {exc}") from exc
            ups += u
            w.tick()
            report.examples_seen += 1
        report.per_epoch_updates.append(ups)
        report.updates_made += ups
        report.epochs_run = epoch + 1
        log.info("epoch %d: %d updates", epoch + 1, ups)
        if on_epoch is not None:
            on_epoch(epoch, w, report)
        if ups == 0:
            report.converged = True
            if config.stop_on_convergence:
                break
    report.wall_time = time.perf_counter() - t0
    report.final_k = w.k
    if config.average:
        final = accumulate_and_finalize(w)
    else:
        final = w.copy()
        final.frozen = True
    return final, report


# -- diagnostics ------------------------------------------------------------------


def empirical_margin(task: TaskDefinition, dataset: Sequence, w: WeightVector, policy: EnqueuePolicy,
                     gamma: float | None = None) -> MarginDiagnostics:
    """Smallest score gap between the best y-good and best y-bad candidate.

    Decisions are the candidate pools of each expansion round along the
    search trajectory under ``policy``; when the gold is lost the trajectory
    resumes from its y-good siblings.  Scores are measured for ``w`` scaled
    into the unit ball.  ``D`` is the root-sum-square shortfall of every
    decision below ``gamma`` (default: the measured margin, giving 0).
    """
    n = w.norm()
    scale = 1.0 / n if n > 1.0 else 1.0
    margins: list[float] = []
    for x, y in dataset:
        x = task.prepare(x)
        frontier = Frontier.of([make_root(task, x, w, y)])
        while True:
            goal = next((m for m in frontier if task.is_goal(x, m.state)), None)
            if goal is not None:
                break
            good_nodes = [m for m in frontier if m.good]
            if not good_nodes:
                sibs = siblings(frontier[0], y, task, x, w)
                frontier = Frontier.of(sibs)
                continue
            rnd = Round.expand(task, x, w, list(frontier), y=y)
            keys = rnd.keys()
            if rnd.good.any() and not rnd.good.all():
                margins.append(scale * float(keys[rnd.good].max() - keys[~rnd.good].max()))
            frontier = prune(rnd, policy)
            if not frontier.any_good():
                gi = int(np.flatnonzero(rnd.good)[np.argmax(keys[rnd.good])])
                frontier = Frontier.of([rnd.node(gi)])
            elif any(task.is_goal(x, m.state) for m in frontier):
                first = next(m for m in frontier if task.is_goal(x, m.state))
                if not first.good:
                    good = [m for m in frontier if m.good]
                    frontier = Frontier.of(good[:1])
    if not margins:
        return MarginDiagnostics(math.inf, 0.0, scale, 0, 0)
    gamma_hat = min(margins)
    target = gamma_hat if gamma is None else gamma
    D = math.sqrt(math.fsum(max(0.0, target - p) ** 2 for p in margins))
    violations = sum(1 for p in margins if p <= 0.0)
    return MarginDiagnostics(gamma_hat, D, scale, len(margins), violations)


def radius_R(task: TaskDefinition, dataset: Sequence) -> float:
    """Largest ``||Phi(x, n) - Phi(x, m)||`` between a gold-path node ``n``
    and any successor ``m`` of ``n``'s parent.

    Both share the parent's path, so the difference is the difference of
    their last feature deltas.
    """
    R = 0.0
    for x, y in dataset:
        x = task.prepare(x)
        state = task.initial_state(x)
        while not task.is_goal(x, state):
            acts = task.actions(x, state)
            idx = task.good_action_indices(x, state, y)
            if not idx:
                raise TaskContractError(f"y-good non-goal state has no y-good successor: {state!r}")
            deltas = [task.action_features(x, state, a) for a in acts]
            for gi in idx:
                for d in deltas:
                    R = max(R, (deltas[gi] - d).norm())
            state = task.apply(x, state, acts[idx[0]])
    return R


def bound_theorem1(R: float, gamma: float) -> float:
    """Perceptron mistake bound ``R^2 / gamma^2``."""
    if gamma <= 0:
        raise ValueError("margin must be positive")
    if R < 0:
        raise ValueError("radius must be non-negative")
    return R * R / (gamma * gamma)


def bound_theorem4(alpha: float, gamma: float) -> float:
    """ALMA mistake bound ``(2/gamma^2)(2/alpha - 1)^2 + 8/alpha - 4``."""
    if gamma <= 0:
        raise ValueError("margin must be positive")
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    return 2.0 / gamma ** 2 * (2.0 / alpha - 1.0) ** 2 + 8.0 / alpha - 4.0


def bound_inseparable_perceptron(R: float, D: float, gamma: float) -> float:
    """``(R + D)^2 / gamma^2`` for one fixed (w, gamma); no minimization."""
    if gamma <= 0:
        raise ValueError("margin must be positive")
    return (R + D) ** 2 / gamma ** 2


def bound_inseparable_alma(D: float, gamma: float, C: float = math.sqrt(2.0)) -> float:
    """ALMA correction bound for one fixed (w, gamma) with ``rho = (C gamma)^-2``."""
    if gamma <= 0:
        raise ValueError("margin must be positive")
    rho = (C * gamma) ** -2
    return D / gamma + rho ** 2 / 2 + rho * math.sqrt(rho ** 2 / 4 + D / gamma + 1)

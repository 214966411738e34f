from __future__ import annotations

import itertools
import math
import random
from collections import Counter

import pytest

from laso import learning
from laso.corpus import Sentence
from laso.linalg import WeightVector
from laso.tasks import JointTask

# Totals across the session, read by the acceptance suite.
INVARIANT_STATS: Counter = Counter()

# criterion number -> PASS/FAIL line, printed after the run
ACCEPTANCE: dict = {}


def good_states_at(task, x, y, depth: int) -> set:
    """All y-good states at ``depth``, by breadth-first expansion of the
    y-good successors (independent of the learner's sibling code)."""
    layer = {task.initial_state(x)}
    for _ in range(depth):
        nxt = set()
        for s in layer:
            if not task.is_goal(x, s):
                nxt.update(task.good_successors(x, s, y))
        layer = nxt
    return layer


def check_update(task, x, y, ev) -> None:
    """The recovery invariant for one update event."""
    INVARIANT_STATS["updates"] += 1
    if ev.reason == "end":
        # end-only updates compare full outputs; there is no queue to restart
        assert len(ev.siblings) == 1 and task.is_goal(x, ev.siblings[0].state)
        return
    states = [n.state for n in ev.queue]
    assert all(n.good for n in ev.queue)
    assert len(set(states)) == len(states)
    assert set(states) == good_states_at(task, x, y, ev.node.depth)
    assert [n.state for n in ev.siblings] == states
    INVARIANT_STATS["checked"] += 1


def check_norm(w: WeightVector) -> None:
    INVARIANT_STATS["norm_checks"] += 1
    assert w.norm() <= 1.0 + 1e-9
    assert math.sqrt(float(w.values @ w.values)) <= 1.0 + 1e-9


@pytest.fixture(autouse=True)
def recovery_invariants(monkeypatch):
    """Wrap every learn_one call made by ``train`` in the suite with the
    no-fail and recovery checks."""
    real = learning.learn_one

    def wrapped(task, x, y, w, policy, rule, mode="laso", bad_set="queue", on_update=None):
        def hook(ev):
            check_update(task, task.prepare(x), y, ev)
            if rule.kind == "alma":
                check_norm(w)
            if on_update is not None:
                on_update(ev)

        out = real(task, x, y, w, policy, rule, mode, bad_set, hook)
        INVARIANT_STATS["learn_one"] += 1
        assert isinstance(out[0], WeightVector)
        return out

    monkeypatch.setattr(learning, "learn_one", wrapped)
    yield


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
    if INVARIANT_STATS["learn_one"]:
        terminalreporter.write_line(
            f"invariants: {INVARIANT_STATS['learn_one']} learn_one calls, {INVARIANT_STATS['updates']} updates, "
            f"{INVARIANT_STATS['checked']} queue checks, {INVARIANT_STATS['norm_checks']} norm checks")


# -- tiny joint instances ------------------------------------------------------

TINY_POS = ["DT", "NN", "VB"]
TINY_TYPES = ["NP"]


def tiny_joint_task() -> JointTask:
    return JointTask(TINY_POS, TINY_TYPES)


def random_tiny_sentence(rng: random.Random, task: JointTask, length: int) -> Sentence:
    words = [rng.choice(["the", "dog", "runs", "Fast", "a", "cat", "12", "up"]) for _ in range(length)]
    pos, bio = [], []
    prev = None
    for _ in range(length):
        b = rng.choice(task._legal(prev))
        prev = b
        pos.append(rng.choice(TINY_POS))
        bio.append(task.bio_tags[b])
    return Sentence(words, pos, bio)


def all_joint_labelings(task: JointTask, n: int):
    """Every legal (POS, BIO) sequence of length ``n`` in lexicographic
    action order."""
    npos, nbio = len(task.pos_tags), len(task.bio_tags)
    pairs = [(p, b) for p in range(npos) for b in range(nbio)]
    for seq in itertools.product(pairs, repeat=n):
        prev = None
        ok = True
        for _, b in seq:
            if b not in task._legal(prev):
                ok = False
                break
            prev = b
        if ok:
            yield seq


def sentence(text: str) -> Sentence:
    """``word/POS/CHUNK`` tokens separated by spaces."""
    rows = [t.rsplit("/", 2) for t in text.split()]
    return Sentence([r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows])

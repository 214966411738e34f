"""Training, decoding and verification recipes shared by the CLI and tests."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .corpus import EvalResult, Sentence, evaluate_corpus
from .learning import (
    LearnerConfig,
    TrainingReport,
    UpdateEvent,
    UpdateRule,
    bound_theorem1,
    bound_theorem4,
    empirical_margin,
    radius_R,
    train,
)
from .linalg import WeightVector, accumulate_and_finalize
from .search import EnqueuePolicy, search
from .tasks import ChunkingTask, FeatureTemplateConfig, JointTask, make_separable_dataset

log = logging.getLogger(__name__)


def build_task(name: str, sentences: Sequence[Sentence], config: FeatureTemplateConfig | None = None):
    if name == "chunk":
        return ChunkingTask.from_corpus(sentences, config)
    if name == "joint":
        return JointTask.from_corpus(sentences, config)
    raise ValueError(f"unknown task {name!r}; expected 'chunk' or 'joint'")


def decode_corpus(task, sentences: Sequence[Sentence], w: WeightVector, policy: EnqueuePolicy) -> list[Sentence]:
    return [task.output(s, search(task, s, w, policy).state) if len(s) else s for s in sentences]


def evaluate(task, sentences: Sequence[Sentence], w: WeightVector, policy: EnqueuePolicy) -> EvalResult:
    return evaluate_corpus(sentences, decode_corpus(task, sentences, w, policy))


def fit(task, sentences: Sequence[Sentence], config: LearnerConfig,
        heldout: Sequence[Sentence] | None = None, decode_policy: EnqueuePolicy | None = None,
        on_update: Callable[[UpdateEvent], None] | None = None) -> tuple[WeightVector, TrainingReport]:
    """Train on ``sentences``; with ``heldout`` keep the epoch whose averaged
    weights score the best held-out chunk F (earliest on ties).

    The task's feature indexer is frozen on return.
    """
    data = [task.example(s) for s in sentences if len(s)]
    decode_policy = decode_policy or config.policy
    best: dict = {}

    def on_epoch(epoch: int, w: WeightVector, report: TrainingReport) -> None:
        if not heldout:
            return
        avg = accumulate_and_finalize(w) if config.average else w
        f = evaluate(task, heldout, avg, decode_policy).f1
        report.heldout_f.append(f)
        log.info("epoch %d: held-out F %.4f", epoch + 1, f)
        if not best or f > best["f"]:
            best.update(f=f, epoch=epoch + 1, w=avg if avg is not w else w.copy())

    if config.epochs == 0:
        log.warning("epochs = 0: the model keeps zero weights")
    if data:
        w, report = train(task, data, config, on_update=on_update, on_epoch=on_epoch)
    else:
        w, report = WeightVector(task.n_features), TrainingReport(rule=config.rule.tag, policy=str(config.policy))
        w.frozen = True
    if best:
        w = best["w"]
        w.frozen = True
        report.best_epoch = best["epoch"]
    task.indexer.freeze()
    return w, report


# -- beam sweep ---------------------------------------------------------------


@dataclass
class SweepResult:
    train_beams: list
    decode_beams: list
    f: list  # f[i][j]: train beam i, decode beam j (percent)
    reports: list = field(default_factory=list)

    def to_text(self) -> str:
        width = max(6, *(len(str(b)) + 1 for b in self.decode_beams))
        head = "train\\decode".ljust(13) + "".join(str(b).rjust(width + 1) for b in self.decode_beams)
        rows = [head]
        for tb, row in zip(self.train_beams, self.f):
            rows.append(str(tb).ljust(13) + "".join(f"{v:.2f}".rjust(width + 1) for v in row))
        return "\n".join(rows) + "\n"

    def as_dict(self) -> dict:
        return {"train_beams": self.train_beams, "decode_beams": self.decode_beams, "f": self.f}


def beam_sweep(task_name: str, train_sents: Sequence[Sentence], eval_sents: Sequence[Sentence],
               train_beams: Sequence[int], decode_beams: Sequence[int], config: LearnerConfig,
               templates: FeatureTemplateConfig | None = None,
               heldout: Sequence[Sentence] | None = None) -> SweepResult:
    """Train one model per training beam and decode ``eval_sents`` at every decode beam."""
    matrix, reports = [], []
    for tb in train_beams:
        task = build_task(task_name, train_sents, templates)
        cfg = LearnerConfig(**{**config.__dict__, "policy": EnqueuePolicy.beam(tb)})
        w, report = fit(task, train_sents, cfg, heldout)
        reports.append(report)
        matrix.append([100.0 * evaluate(task, eval_sents, w, EnqueuePolicy.beam(db)).f1 for db in decode_beams])
    return SweepResult(list(train_beams), list(decode_beams), matrix, reports)


# -- bound verification ---------------------------------------------------------


@dataclass
class BoundCheck:
    rule: str
    updates: int
    gamma: Optional[float]
    radius: Optional[float]
    bound: Optional[float]
    epochs: int
    converged: bool
    seed: Optional[int] = None
    max_norm: float = 0.0

    @property
    def applicable(self) -> bool:
        return self.gamma is not None and self.gamma > 0 and self.bound is not None

    @property
    def passed(self) -> bool:
        return self.applicable and self.updates <= self.bound

    @property
    def status(self) -> str:
        if not self.applicable:
            return "inseparable; bound not applicable"
        return "PASS" if self.passed else "FAIL"

    def to_text(self) -> str:
        def fmt(v):
            return "NA" if v is None else f"{v:.6g}"
        seed = "" if self.seed is None else f"seed={self.seed} "
        return (f"{seed}rule={self.rule} updates={self.updates} epochs={self.epochs} "
                f"converged={self.converged} gamma={fmt(self.gamma)} R={fmt(self.radius)} "
                f"bound={fmt(self.bound)} status={self.status}")


def verify_bounds_on(task, data: Sequence, rule: UpdateRule, policy: EnqueuePolicy, max_epochs: int = 50,
                     gamma: float | None = None, radius: float | None = None, seed: int | None = None,
                     on_update: Callable[[UpdateEvent], None] | None = None) -> BoundCheck:
    """Train to convergence (an epoch without updates) and compare the update
    count with the mistake bound of ``rule``.

    ``gamma``/``radius`` may be supplied (e.g. the generator's known margin);
    otherwise the margin is measured on the final raw weights.
    """
    w = WeightVector(getattr(task, "n_features", 0))
    norms = [0.0]

    def hook(ev: UpdateEvent) -> None:
        norms[0] = max(norms[0], w.norm())
        if on_update is not None:
            on_update(ev)

    config = LearnerConfig(rule=rule, policy=policy, epochs=max_epochs, stop_on_convergence=True)
    _, report = train(task, data, config, w=w, on_update=hook)
    if gamma is None:
        diag = empirical_margin(task, data, w, policy)
        gamma = diag.gamma if diag.decisions else None
    usable = gamma is not None and 0 < gamma < math.inf
    bound = None
    if rule.kind == "perceptron":
        if radius is None:
            radius = radius_R(task, data)
        if usable:
            bound = bound_theorem1(radius, gamma)
    elif usable:
        bound = bound_theorem4(rule.alpha, gamma)
    return BoundCheck(rule.tag, report.updates_made, gamma, radius, bound, report.epochs_run,
                      report.converged, seed, norms[0])


def verify_bounds_synthetic(seed: int, rule: UpdateRule, policy: EnqueuePolicy | None = None,
                            max_epochs: int = 200, on_update: Callable[[UpdateEvent], None] | None = None,
                            **gen) -> BoundCheck:
    """Bound check on a generated separable stream, using the generator's
    unit separator to fix the margin."""
    task, data, w_star = make_separable_dataset(seed, **gen)
    policy = policy or EnqueuePolicy.beam(1)
    gamma = empirical_margin(task, data, w_star, policy).gamma
    radius = radius_R(task, data) if rule.kind == "perceptron" else None
    return verify_bounds_on(task, data, rule, policy, max_epochs, gamma, radius, seed, on_update)


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0

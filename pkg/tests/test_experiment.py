import math

import pytest

from laso.experiment import (
    BoundCheck,
    SweepResult,
    beam_sweep,
    build_task,
    evaluate,
    fit,
    verify_bounds_on,
    verify_bounds_synthetic,
)
from laso.fixture import load_fixture
from laso.learning import LearnerConfig, UpdateRule, bound_theorem4
from laso.search import EnqueuePolicy
from laso.tasks import make_separable_dataset


def test_build_task_names():
    sents = load_fixture("train", 5)
    assert build_task("joint", sents).name == "joint"
    assert build_task("chunk", sents).name == "chunk"
    with pytest.raises(ValueError):
        build_task("ner", sents)


def test_fit_with_heldout_keeps_best_epoch():
    sents = load_fixture("train", 40)
    train, held = sents[:30], sents[30:]
    task = build_task("chunk", train)
    w, report = fit(task, train, LearnerConfig(policy=EnqueuePolicy.beam(1), epochs=3), heldout=held)
    assert len(report.heldout_f) == 3
    assert report.best_epoch == 1 + report.heldout_f.index(max(report.heldout_f))
    assert evaluate(task, held, w, EnqueuePolicy.beam(1)).f1 == pytest.approx(max(report.heldout_f))
    assert task.indexer.frozen and w.frozen


def test_fit_zero_epochs(caplog):
    sents = load_fixture("train", 3)
    task = build_task("joint", sents)
    w, report = fit(task, sents, LearnerConfig(epochs=0))
    assert not w.values.any()
    assert report.updates_made == 0
    assert "epochs = 0" in caplog.text


def test_one_by_one_sweep_matches_fit_and_evaluate():
    sents = load_fixture("train", 20)
    test = load_fixture("test", 10)
    cfg = LearnerConfig(rule=UpdateRule.perceptron(), epochs=1)
    res = beam_sweep("joint", sents, test, [2], [2], cfg)
    task = build_task("joint", sents)
    w, _ = fit(task, sents, LearnerConfig(rule=UpdateRule.perceptron(), policy=EnqueuePolicy.beam(2), epochs=1))
    assert res.f == [[100 * evaluate(task, test, w, EnqueuePolicy.beam(2)).f1]]


def test_sweep_dimensions_and_text():
    res = SweepResult([1, 5, 10], [1, 5], [[90.0, 91.0], [89.5, 92.25], [88.0, 93.0]])
    lines = res.to_text().splitlines()
    assert len(lines) == 4
    assert lines[2].split() == ["5", "89.50", "92.25"]
    assert res.as_dict()["train_beams"] == [1, 5, 10]


def test_bound_check_status():
    ok = BoundCheck("alma", 10, 0.1, None, bound_theorem4(0.9, 0.1), 3, True)
    assert ok.passed and ok.status == "PASS"
    bad = BoundCheck("alma", 10, -0.2, None, None, 50, False)
    assert not bad.applicable
    assert bad.status == "inseparable; bound not applicable"
    assert "status=inseparable" in bad.to_text()
    assert "gamma=NA" in BoundCheck("perceptron", 0, None, 1.0, None, 1, True).to_text()


@pytest.mark.parametrize("rule", [UpdateRule.perceptron(), UpdateRule.alma(0.9)])
def test_verify_bounds_synthetic_passes(rule):
    chk = verify_bounds_synthetic(3, rule)
    assert chk.converged and chk.passed
    assert chk.gamma >= 0.05 - 1e-12
    if rule.kind == "alma":
        assert chk.max_norm <= 1 + 1e-9


def test_verify_bounds_on_measures_margin():
    task, data, _ = make_separable_dataset(11, n_seqs=20)
    chk = verify_bounds_on(task, data, UpdateRule.perceptron(), EnqueuePolicy.beam(1), max_epochs=100)
    assert chk.converged
    assert chk.gamma is not None and chk.gamma > 0
    assert chk.radius > 0
    assert chk.bound == pytest.approx(chk.radius ** 2 / chk.gamma ** 2)


def test_verify_bounds_inseparable_fixture():
    sents = load_fixture("train", 30)
    task = build_task("joint", sents)
    data = [task.example(s) for s in sents]
    chk = verify_bounds_on(task, data, UpdateRule.alma(0.9), EnqueuePolicy.beam(1), max_epochs=2)
    # two epochs are not enough to converge; the margin may or may not be positive
    if chk.applicable:
        assert math.isfinite(chk.bound)
    else:
        assert chk.status == "inseparable; bound not applicable"

import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_tiny_sentence, sentence, tiny_joint_task
from laso.corpus import Sentence
from laso.fixture import load_fixture
from laso.linalg import FeatureIndexer, WeightVector
from laso.search import EnqueuePolicy, count_outputs, search
from laso.tasks import (
    ChunkingTask,
    ChunkState,
    FeatureTemplateConfig,
    JointTask,
    extract_base_features,
    gold_tiling,
    make_separable_dataset,
    meta_predicates,
    task_from_header,
)
from laso.tasks.features import (
    case_pattern,
    default_gazetteers,
    load_gazetteer,
    regex_features,
    resolve_gazetteers,
    stem,
    token_values,
    window_predicates,
)

GREAT = sentence("Great/NNP/B-NP American/NNP/I-NP said/VBD/B-VP")


# -- features -------------------------------------------------------------------------


def test_base_features_of_great():
    feats = extract_base_features(GREAT, 0)
    assert "cp|Xx" in feats
    for p in ("G", "Gr", "Gre"):
        assert f"p{len(p)}|{p}" in feats
    for s in ("t", "at", "eat"):
        assert f"s{len(s)}|{s}" in feats
    assert "w|Great" in feats and "lw|great" in feats and "pos|NNP" in feats and "pos1|N" in feats


def test_base_features_are_deterministic():
    assert extract_base_features(GREAT, 1) == extract_base_features(GREAT, 1)


def test_stopword_membership():
    s = sentence("the/DT/B-NP dog/NN/I-NP")
    assert "gz|stop" in extract_base_features(s, 0)
    assert "gz|stop" not in extract_base_features(s, 1)


def test_base_features_index_check():
    with pytest.raises(IndexError):
        extract_base_features(GREAT, 3)


def test_case_pattern_and_stem():
    assert case_pattern("Great") == "Xx"
    assert case_pattern("U.S.") == "XoXo"
    assert case_pattern("1990s") == "dx"
    assert case_pattern("McDonald") == "XxXx"
    assert stem("running") == "runn"
    assert stem("companies") == "company"
    assert stem("is") == "is"
    assert stem("Sales") == "sale"


def test_regexes():
    assert "re|INITCAP" in regex_features("Great")
    assert "re|NUMBER" in regex_features("3,000")
    assert "re|ACRONYM" in regex_features("U.S.")
    assert "re|FRACTION" in regex_features("3/4")
    assert regex_features("dog") == ["re|LOWER"]


def test_gazetteer_files(tmp_path, caplog):
    p = tmp_path / "names.txt"
    p.write_text("# comment\nSmith\n\njones\n", encoding="utf-8")
    assert load_gazetteer(p) == frozenset({"smith", "jones"})
    assert load_gazetteer(tmp_path / "missing.txt") is None
    assert "not found" in caplog.text
    cfg = FeatureTemplateConfig(gazetteers={"names": str(p), "gone": str(tmp_path / "x.txt")})
    gaz = resolve_gazetteers(cfg)
    assert set(gaz) == {"stop", "names"}
    assert resolve_gazetteers(FeatureTemplateConfig(gazetteer=False)) == {}
    assert "the" in default_gazetteers()["stop"]


def test_template_switches_remove_features():
    cfg = FeatureTemplateConfig(affixes=False, stem=False, word_stem=False)
    names = [t for t, _ in token_values("Great", "NNP", cfg, {})]
    assert not any(n.startswith(("p", "s")) and n[1:].isdigit() for n in names)
    assert "st" not in names and "ws" not in names


def test_template_config_round_trip(tmp_path):
    cfg = FeatureTemplateConfig(window=1, regex=False, position_cap=2)
    assert FeatureTemplateConfig.from_dict(cfg.to_dict()) == cfg
    f = tmp_path / "templates.ini"
    f.write_text("window = 1\nregex = false\nposition_cap = 2\n", encoding="utf-8")
    assert FeatureTemplateConfig.from_file(f) == cfg
    f.write_text("bogus = 1\n", encoding="utf-8")
    with pytest.raises(ValueError):
        FeatureTemplateConfig.from_file(f)


def test_meta_features_single_word_chunk():
    cfg = FeatureTemplateConfig()
    values = [token_values(w, p, cfg, {}) for w, p in zip(GREAT.tokens, GREAT.pos)]
    preds = meta_predicates(values, 2, 3, cfg)
    at0 = {p.split("@0|")[1] for p in preds if "@0|" in p}
    at_last = {p.split("@-1|")[1] for p in preds if "@-1|" in p}
    assert at0 == at_last == {v for _, v in values[2]}
    assert not any(p.split("|")[0] in ("lw2", "lw3", "pos2", "cp2") for p in preds)
    assert ">|</s>" in preds
    assert "len|1" in preds


def test_meta_features_two_word_chunk():
    cfg = FeatureTemplateConfig()
    values = [token_values(w, p, cfg, {}) for w, p in zip(GREAT.tokens, GREAT.pos)]
    preds = meta_predicates(values, 0, 2, cfg)
    assert "len|2" in preds
    assert "<|<s>" in preds
    assert "w>|said" in preds
    assert "pos*|NNP NNP" in preds
    assert "lw2|great american" in preds
    assert "pos2|NNP NNP" in preds
    assert not any(p.startswith("lw3|") for p in preds)


def test_window_predicates_edges():
    cfg = FeatureTemplateConfig(window=2)
    values = [token_values(w, None, cfg, {}) for w in GREAT.tokens]
    preds = window_predicates(values, GREAT.tokens, 0, cfg)
    assert preds[0] == "bias|1"
    assert "edge-1|<s>" in preds and "edge-2|<s>" in preds
    assert "w+1|American" in preds and "w+2|said" in preds
    assert not any(p.startswith("pos") for p in preds)


# -- joint task -------------------------------------------------------------------------


def test_joint_bio_constraint():
    task = JointTask(["NN", "VB"], ["NP", "VP"])
    o, b_np, b_vp, i_np, i_vp = (task.bio_index[t] for t in ("O", "B-NP", "B-VP", "I-NP", "I-VP"))
    assert set(task._legal(None)) == {o, b_np, b_vp}
    assert set(task._legal(o)) == {o, b_np, b_vp}
    assert i_np in task._legal(b_np) and i_vp not in task._legal(b_np)
    assert i_np in task._legal(i_np) and i_vp not in task._legal(i_np)
    x = sentence("a/NN/B-NP b/NN/I-NP")
    after_o = task.actions(x, ((0, o),))
    assert not any(b in (i_np, i_vp) for _, b in after_o)
    assert len(after_o) == 2 * 3
    assert len(task.actions(x, ((0, b_np),))) == 2 * 4


def test_joint_branching_counts():
    task = tiny_joint_task()
    # after O or at the start: 3 POS x {O, B-NP}; after B/I: 3 x {O, B-NP, I-NP}
    x = sentence("a/DT/O b/DT/O")
    assert len(task.actions(x, ())) == 6
    assert len(task.actions(x, ((0, 1),))) == 9
    # the first word ends in O (3 ways, 6 continuations) or B-NP (3 ways, 9)
    assert count_outputs(task, sentence("a/DT/O")) == 6
    assert count_outputs(task, x) == 3 * 6 + 3 * 9


def test_joint_example_validation():
    task = JointTask(["DT", "NN"], ["NP"])
    with pytest.raises(ValueError):
        task.example(sentence("a/DT/I-NP"))
    with pytest.raises(ValueError):
        task.example(sentence("a/XX/B-NP"))
    x, y = task.example(sentence("a/DT/B-NP dog/NN/I-NP"))
    assert y == ((0, 1), (1, 2))


def test_joint_goodness_and_output():
    s = sentence("the/DT/B-NP dog/NN/I-NP barks/VBZ/B-VP")
    task = JointTask.from_corpus([s])
    x, y = task.example(s)
    assert task.is_good(x, (), y)
    assert task.is_good(x, y[:2], y)
    assert not task.is_good(x, y[:1] + ((0, 0),), y)
    assert task.output(x, y) == s
    assert task.good_successors(x, y[:1], y) == [y[:2]]
    assert task.good_action_indices(x, y, y) == []


def test_joint_disjoint_features_for_different_bio():
    task = tiny_joint_task()
    x = task.prepare(sentence("the/DT/B-NP dog/NN/I-NP"))
    f_o = task.action_features(x, (), (0, 0))
    f_b = task.action_features(x, (), (0, 1))
    bio_ids = lambda f: {i for i in f.ids if task.indexer.contexts[i % task.indexer.n_contexts].startswith("C:")}
    assert bio_ids(f_o) and bio_ids(f_b)
    assert not bio_ids(f_o) & bio_ids(f_b)


def test_joint_unseen_pair_has_no_pair_feature():
    s = sentence("the/DT/B-NP dog/NN/I-NP")
    task = JointTask.from_corpus([s])
    assert task.pairs == [("DT", "B-NP"), ("NN", "I-NP")]
    x = task.prepare(s)
    f = task.action_features(x, (), (task.pos_index["NN"], task.bio_index["O"]))
    ctx = {task.indexer.contexts[i % task.indexer.n_contexts] for i in f.ids}
    assert not any(c.startswith("PC:") for c in ctx)


def test_joint_header_round_trip():
    sents = load_fixture("train", 20)
    task = JointTask.from_corpus(sents)
    clone = task_from_header(task.header(), FeatureIndexer(task.contexts))
    assert isinstance(clone, JointTask)
    assert clone.header() == task.header()


def test_tiny_instance_sentence_generator_is_legal():
    rng = random.Random(0)
    task = tiny_joint_task()
    for _ in range(50):
        s = random_tiny_sentence(rng, task, rng.randint(1, 6))
        task.example(s)


# -- chunking task ----------------------------------------------------------------------


def test_gold_tiling_fills_gaps():
    s = sentence("He/PRP/B-NP sat/VBD/B-VP ,/,/O on/IN/B-PP it/PRP/B-NP ././O")
    assert gold_tiling(s) == ((0, 1, "NP"), (1, 2, "VP"), (2, 3, "O"), (3, 4, "PP"), (4, 5, "NP"), (5, 6, "O"))


def test_chunk_operators_count():
    task = ChunkingTask(["NP", "VP"])
    x = sentence("a/DT/O b/DT/O c/DT/O")
    # one remaining word: O plus one single-word chunk per label
    assert len(task.actions(x, ChunkState(2, ()))) == 3
    assert len(task.actions(x, ChunkState(0, ()))) == 1 + 3 * 2
    assert task.actions(x, ChunkState(3, ())) == []


def test_chunk_goodness():
    task = ChunkingTask.from_corpus([GREAT])
    x, y = task.example(GREAT)
    root = task.initial_state(x)
    assert task.is_good(x, root, y)
    np_idx = task.good_action_indices(x, root, y)
    assert len(np_idx) == 1
    nxt = task.apply(x, root, task.actions(x, root)[np_idx[0]])
    assert nxt.spans == ((0, 2, "NP"),)
    assert not task.is_good(x, task.apply(x, root, (1, task.label_index["NP"])), y)
    assert task.output(x, ChunkState(3, y)) == GREAT


def test_chunk_length_limit():
    long_np = sentence(" ".join(f"w{i}/NN/{'B' if i == 0 else 'I'}-NP" for i in range(5)))
    with pytest.raises(ValueError):
        ChunkingTask.from_corpus([long_np], FeatureTemplateConfig(max_chunk_length=4))
    task = ChunkingTask.from_corpus([long_np], FeatureTemplateConfig(max_chunk_length=5))
    assert max(a[0] for a in task.actions(long_np, task.initial_state(long_np))) == 5


def test_chunk_header_round_trip():
    task = ChunkingTask.from_corpus(load_fixture("train", 20))
    clone = task_from_header(task.header(), FeatureIndexer(task.contexts))
    assert isinstance(clone, ChunkingTask)
    assert clone.labels == task.labels
    with pytest.raises(ValueError):
        task_from_header({"task": "parse"})


def test_chunk_indexer_mismatch():
    with pytest.raises(ValueError):
        ChunkingTask(["NP"], indexer=FeatureIndexer(["VP", "O"]))


# -- decoding reproduces training data once converged ------------------------------------


@pytest.mark.parametrize("name", ["chunk", "joint"])
def test_converged_model_reproduces_gold(name):
    sents = load_fixture("train", 12)
    from laso.experiment import build_task, decode_corpus
    from laso.learning import LearnerConfig, UpdateRule, train

    task = build_task(name, sents)
    data = [task.example(s) for s in sents]
    w, report = train(task, data, LearnerConfig(rule=UpdateRule.perceptron(), policy=EnqueuePolicy.beam(2),
                                                epochs=30, average=False, stop_on_convergence=True))
    assert report.converged
    assert decode_corpus(task, sents, w, EnqueuePolicy.beam(2)) == sents


# -- synthetic --------------------------------------------------------------------------


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_synthetic_generator_is_separable(seed):
    task, data, w_star = make_separable_dataset(seed, n_seqs=10)
    assert np.linalg.norm(w_star.values) == pytest.approx(1.0)
    for x, y in data:
        assert 1 <= len(y) <= 10
        assert search(task, x, w_star, EnqueuePolicy.beam(1)).state == y
        assert np.all(np.linalg.norm(x.obs, axis=1) <= 0.7 + 1e-12)


def test_synthetic_is_seeded():
    a = make_separable_dataset(5, n_seqs=3)
    b = make_separable_dataset(5, n_seqs=3)
    assert [y for _, y in a[1]] == [y for _, y in b[1]]
    np.testing.assert_array_equal(a[2].values, b[2].values)


def test_synthetic_scores_match_features():
    task, data, w_star = make_separable_dataset(1, n_seqs=2)
    x, _ = data[0]
    w = WeightVector(values=np.arange(task.n_features, dtype=float))
    for a, s in zip(task.actions(x, ()), task.action_scores(x, (), w)):
        assert s == pytest.approx(w.dot(task.action_features(x, (), a)))


def test_sentence_length_mismatch():
    from laso.corpus import DataError

    with pytest.raises(DataError):
        Sentence(["a"], ["DT", "NN"], ["O"])

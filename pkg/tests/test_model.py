import json
import struct

import numpy as np
import pytest

from laso.experiment import build_task, decode_corpus, fit
from laso.fixture import load_fixture
from laso.learning import LearnerConfig, UpdateRule
from laso.model import FORMAT_VERSION, MAGIC, Model, ModelFormatError, dumps, load, loads, save
from laso.search import EnqueuePolicy


@pytest.fixture(scope="module")
def trained():
    sents = load_fixture("train", 12)
    out = {}
    for name in ("joint", "chunk"):
        task = build_task(name, sents)
        w, report = fit(task, sents, LearnerConfig(rule=UpdateRule.alma(0.9), policy=EnqueuePolicy.beam(2), epochs=1))
        out[name] = Model(task, w, UpdateRule.alma(0.9), EnqueuePolicy.beam(2), {"updates_made": report.updates_made})
    return sents, out


@pytest.mark.parametrize("name", ["joint", "chunk"])
def test_round_trip_is_bit_exact(trained, name):
    sents, models = trained
    m = models[name]
    blob = dumps(m)
    back = loads(blob)
    assert dumps(back) == blob
    assert back.weights.values.tobytes() == m.weights.values.tobytes()
    assert back.indexer.contexts == m.indexer.contexts
    assert back.indexer.predicates == m.indexer.predicates
    assert back.rule == m.rule
    assert back.train_policy == m.train_policy
    assert back.task.header() == m.task.header()
    assert decode_corpus(back.task, sents, back.weights, EnqueuePolicy.beam(2)) == \
        decode_corpus(m.task, sents, m.weights, EnqueuePolicy.beam(2))


def test_layout(trained):
    _, models = trained
    m = models["joint"]
    blob = dumps(m)
    assert blob[:8] == MAGIC
    assert struct.unpack("<I", blob[8:12])[0] == FORMAT_VERSION
    (hlen,) = struct.unpack("<I", blob[12:16])
    header = json.loads(blob[16:16 + hlen])
    assert header["feature_count"] == m.indexer.size
    assert header["task"]["task"] == "joint"
    assert header["rule"]["alpha"] == 0.9
    n = m.indexer.size
    tail = np.frombuffer(blob[-8 * n:], dtype="<f8")
    np.testing.assert_array_equal(tail, m.weights.values[:n])
    assert struct.unpack("<Q", blob[-8 * n - 8:-8 * n])[0] == n


def test_save_and_load(tmp_path, trained):
    _, models = trained
    p = tmp_path / "m.bin"
    save(models["chunk"], p)
    assert load(p, expect_task="chunk").task.name == "chunk"
    with pytest.raises(ModelFormatError):
        load(p, expect_task="joint")
    with pytest.raises(FileNotFoundError):
        load(tmp_path / "nope.bin")


def test_corrupt_files_are_rejected(trained):
    _, models = trained
    blob = dumps(models["chunk"])
    with pytest.raises(ModelFormatError, match="magic"):
        loads(b"NOTAMODL" + blob[8:])
    with pytest.raises(ModelFormatError, match="version"):
        loads(blob[:8] + struct.pack("<I", FORMAT_VERSION + 1) + blob[12:])
    with pytest.raises(ModelFormatError, match="truncated"):
        loads(blob[:-3])
    with pytest.raises(ModelFormatError, match="trailing"):
        loads(blob + b"\0")
    with pytest.raises(ModelFormatError):
        loads(blob[:16] + b"#" + blob[17:])


def test_unknown_task_in_header(trained):
    _, models = trained
    m = models["chunk"]
    blob = dumps(m)
    (hlen,) = struct.unpack("<I", blob[12:16])
    header = json.loads(blob[16:16 + hlen])
    header["task"]["task"] = "parse"
    h = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with pytest.raises(ModelFormatError, match="known task"):
        loads(blob[:12] + struct.pack("<I", len(h)) + h + blob[16 + hlen:])


def test_loaded_weights_are_frozen(trained):
    _, models = trained
    back = loads(dumps(models["joint"]))
    assert back.weights.frozen
    assert back.indexer.frozen

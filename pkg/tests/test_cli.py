import json

import pytest

from laso import cli
from laso.corpus import format_conll, read_conll
from laso.fixture import load_fixture
from laso.model import load


def run(argv, capsys=None):
    try:
        code = cli.main([str(a) for a in argv])
    except SystemExit as exc:  # argparse usage errors
        code = exc.code
    out = capsys.readouterr() if capsys is not None else None
    return code, out


@pytest.fixture
def corpus(tmp_path):
    train = tmp_path / "train.txt"
    test = tmp_path / "test.txt"
    train.write_text(format_conll(load_fixture("train", 30)), encoding="utf-8")
    test.write_text(format_conll(load_fixture("test", 10)), encoding="utf-8")
    return train, test


def test_train_decode_eval(tmp_path, corpus, capsys):
    train, test = corpus
    model = tmp_path / "m.bin"
    code, out = run(["train", "--train", train, "--model", model, "--beam", 2, "--epochs", 1,
                     "--test", test, "--report-json", tmp_path / "r.json"], capsys)
    assert code == 0
    assert "updates_made=" in out.out and "f1=" in out.out and "joint_accuracy=" in out.out
    payload = json.loads((tmp_path / "r.json").read_text())
    assert payload["epochs_run"] == 1 and "test" in payload

    pred = tmp_path / "pred.txt"
    code, _ = run(["decode", "--model", model, "--input", test, "--output", pred], capsys)
    assert code == 0
    assert [s.tokens for s in read_conll(pred)] == [s.tokens for s in read_conll(test)]

    code, out = run(["eval", "--gold", test, "--pred", pred, "--json"], capsys)
    assert code == 0
    assert 0.0 <= json.loads(out.out)["f1"] <= 1.0


def test_same_config_gives_byte_identical_models(tmp_path, corpus):
    train, _ = corpus
    blobs = []
    for name in ("a.bin", "b.bin"):
        code, _ = run(["train", "--train", train, "--model", tmp_path / name, "--task", "chunk",
                       "--rule", "perceptron", "--beam", 1, "--epochs", 2, "--shuffle", "--seed", 7,
                       "--report", tmp_path / "rep.txt"])
        assert code == 0
        blobs.append((tmp_path / name).read_bytes())
    assert blobs[0] == blobs[1]


def test_zero_epochs_writes_zero_model(tmp_path, corpus, caplog):
    train, _ = corpus
    model = tmp_path / "z.bin"
    code, _ = run(["train", "--train", train, "--model", model, "--epochs", 0, "--report", tmp_path / "r.txt"])
    assert code == 0
    assert not load(model).weights.values.any()
    assert "epochs = 0" in caplog.text


def test_decode_defaults_to_training_beam_and_empty_input(tmp_path, corpus, capsys):
    train, _ = corpus
    model = tmp_path / "m.bin"
    run(["train", "--train", train, "--model", model, "--beam", 3, "--epochs", 1, "--report", tmp_path / "r.txt"])
    assert str(load(model).train_policy) == "beam:3"
    empty = tmp_path / "empty.txt"
    empty.write_text("", encoding="utf-8")
    code, out = run(["decode", "--model", model, "--input", empty], capsys)
    assert code == 0 and out.out == ""


def test_fixture_corpus_spec(tmp_path, capsys):
    code, out = run(["train", "--train", "fixture:train", "--limit", 10, "--model", tmp_path / "m.bin",
                     "--epochs", 1, "--beam", 1, "--task", "chunk"], capsys)
    assert code == 0
    assert "examples_seen=10" in out.out


def test_config_file_and_flag_precedence(tmp_path, corpus, capsys):
    train, _ = corpus
    cfg = tmp_path / "run.cfg"
    model = tmp_path / "m.bin"
    cfg.write_text(f"# comment\ntrain = {train}\nmodel = {model}\nrule = perceptron\nepochs = 3\nbeam = 2\n",
                   encoding="utf-8")
    code, out = run(["--config", cfg, "train", "--epochs", 1], capsys)
    assert code == 0
    assert "rule=perceptron" in out.out and "epochs_run=1" in out.out
    assert str(load(model).train_policy) == "beam:2"


def test_config_errors_exit_2(tmp_path, corpus):
    train, _ = corpus
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n", encoding="utf-8")
    assert run(["--config", cfg, "train", "--train", train, "--model", tmp_path / "m"])[0] == 2
    cfg.write_text("rule = adagrad\n", encoding="utf-8")
    assert run(["--config", cfg, "train", "--train", train, "--model", tmp_path / "m"])[0] == 2
    assert run(["--config", tmp_path / "missing.cfg", "train"])[0] == 2
    assert run(["train", "--train", train, "--model", tmp_path / "m", "--alpha", 1.5])[0] == 2
    assert run(["train", "--train", train, "--model", tmp_path / "m", "--beam", 0])[0] == 2
    assert run(["frobnicate"])[0] == 2


def test_data_errors_exit_3(tmp_path, corpus):
    train, test = corpus
    assert run(["decode", "--model", tmp_path / "none.bin", "--input", test])[0] == 3
    bad = tmp_path / "bad.txt"
    bad.write_text("a DT\n", encoding="utf-8")
    assert run(["train", "--train", bad, "--model", tmp_path / "m.bin"])[0] == 3
    assert run(["train", "--train", tmp_path / "nope.txt", "--model", tmp_path / "m.bin"])[0] == 3
    junk = tmp_path / "junk.bin"
    junk.write_bytes(b"hello")
    assert run(["decode", "--model", junk, "--input", test])[0] == 3
    model = tmp_path / "m.bin"
    run(["train", "--train", train, "--model", model, "--epochs", 1, "--beam", 1, "--report", tmp_path / "r"])
    assert run(["decode", "--model", model, "--input", test, "--task", "chunk"])[0] == 3
    short = tmp_path / "short.txt"
    short.write_text(format_conll(load_fixture("test", 3)), encoding="utf-8")
    assert run(["eval", "--gold", test, "--pred", short])[0] == 3


def test_contract_violation_exit_4(tmp_path, corpus, monkeypatch):
    from laso.search import TaskContractError

    train, _ = corpus

    def boom(*a, **k):
        raise TaskContractError("broken task")

    monkeypatch.setattr(cli, "fit", boom)
    assert run(["train", "--train", train, "--model", tmp_path / "m.bin"])[0] == 4


def test_beam_sweep_command(tmp_path, corpus, capsys):
    train, test = corpus
    code, out = run(["beam-sweep", "--train", train, "--test", test, "--train-beams", "1,2",
                     "--decode-beams", "1", "--epochs", 1, "--rule", "perceptron",
                     "--report-json", tmp_path / "s.json"], capsys)
    assert code == 0
    lines = out.out.strip().splitlines()
    assert len(lines) == 3 and lines[0].startswith("train\\decode")
    assert len(json.loads((tmp_path / "s.json").read_text())["f"]) == 2
    assert run(["beam-sweep", "--train", train, "--test", test, "--train-beams", "0"])[0] == 2


def test_verify_bounds_command(tmp_path, capsys):
    code, out = run(["verify-bounds", "--synthetic", "--seeds", 3, "--beam", 1, "--rule", "alma"], capsys)
    assert code == 0
    assert out.out.count("status=PASS") == 3
    assert "summary: 3/3 PASS" in out.out
    code, out = run(["verify-bounds", "--train", "fixture:train", "--subset", 10, "--max-epochs", 1,
                     "--beam", 1, "--rule", "perceptron", "--task", "chunk"], capsys)
    assert code == 0
    assert "rule=perceptron" in out.out and "summary:" in out.out


def test_make_fixture_command(tmp_path):
    code, _ = run(["make-fixture", "--out", tmp_path / "fx", "--train-size", 5, "--test-size", 2])
    assert code == 0
    assert len(read_conll(tmp_path / "fx" / "fixture_train.txt")) == 5
    assert len(read_conll(tmp_path / "fx" / "fixture_test.txt")) == 2


def test_version(capsys):
    code, out = run(["--version"], capsys)
    assert code == 0 and "0.1.0" in out.out

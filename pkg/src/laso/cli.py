"""Command-line interface: train, decode, eval, beam-sweep, verify-bounds.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 task-contract
violation or search failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .corpus import DataError, Sentence, evaluate_corpus, format_conll, read_conll, split_heldout
from .experiment import beam_sweep, build_task, decode_corpus, fit, verify_bounds_on, verify_bounds_synthetic
from .fixture import load_fixture, write_fixture
from .learning import LearnerConfig, UpdateRule
from .model import Model, ModelFormatError, load, save
from .search import EnqueuePolicy, SearchFailure, TaskContractError
from .tasks import FeatureTemplateConfig

log = logging.getLogger("laso")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_CONTRACT = 0, 2, 3, 4
DEFAULT_EPOCHS = {"perceptron": 8, "alma": 3}


class ConfigError(ValueError):
    pass


# -- helpers ----------------------------------------------------------------------


def read_corpus(spec: str, limit: Optional[int] = None) -> list[Sentence]:
    """A CoNLL file path, ``-`` for stdin, or ``fixture:train`` / ``fixture:test``."""
    if spec.startswith("fixture:"):
        sents = load_fixture(spec.split(":", 1)[1])
    elif spec == "-":
        sents = read_conll(sys.stdin)
    else:
        p = Path(spec)
        if not p.exists():
            raise DataError(f"corpus file {p} not found")
        sents = read_conll(p)
    return sents if limit is None else sents[:limit]


def _beams(text: str) -> list[int]:
    try:
        out = [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}") from None
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError("beam widths must be positive integers")
    return out


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return v


def make_rule(args) -> UpdateRule:
    if args.rule == "perceptron":
        return UpdateRule.perceptron()
    try:
        return UpdateRule.alma(args.alpha, args.B, args.C)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def make_templates(args) -> Optional[FeatureTemplateConfig]:
    path = getattr(args, "templates", None)
    if not path:
        return None
    try:
        return FeatureTemplateConfig.from_file(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"template file {path}: {exc}") from None


def learner_config(args, beam: int) -> LearnerConfig:
    rule = make_rule(args)
    epochs = args.epochs if args.epochs is not None else DEFAULT_EPOCHS[rule.kind]
    return LearnerConfig(rule=rule, policy=EnqueuePolicy.beam(beam), epochs=epochs,
                         average=not args.no_average, update_mode=args.update_mode, bad_set=args.bad_set,
                         shuffle_seed=args.seed if args.shuffle else None)


def heldout_split(args, train: list[Sentence]) -> tuple[list[Sentence], Optional[list[Sentence]]]:
    if args.heldout:
        return train, read_corpus(args.heldout)
    if args.heldout_fraction:
        return split_heldout(train, args.heldout_fraction, args.heldout_seed)
    return train, None


def _emit(text: str, dest: Optional[str]) -> None:
    if dest:
        Path(dest).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- commands ---------------------------------------------------------------------


def cmd_train(args) -> int:
    templates = make_templates(args)
    train_sents = read_corpus(args.train, args.limit)
    train_sents, heldout = heldout_split(args, train_sents)
    if not train_sents:
        raise DataError("training corpus is empty")
    config = learner_config(args, args.beam)
    task = build_task(args.task, train_sents, templates)
    w, report = fit(task, train_sents, config, heldout)
    stored = {k: v for k, v in report.__dict__.items() if k != "wall_time"}
    save(Model(task, w, config.rule, config.policy, stored), args.model)
    text = report.to_text()
    test_time = None
    if args.test:
        test_sents = read_corpus(args.test)
        t0 = time.perf_counter()
        pred = decode_corpus(task, test_sents, w, config.policy)
        test_time = time.perf_counter() - t0
        res = evaluate_corpus(test_sents, pred)
        text += res.to_text(joint=args.task == "joint") + f"test_time={test_time:.3f}\n"
    _emit(text, args.report)
    if args.report_json:
        payload = json.loads(report.to_json())
        if test_time is not None:
            payload["test"] = res.as_dict()
            payload["test_time"] = test_time
        Path(args.report_json).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    return EXIT_OK


def cmd_decode(args) -> int:
    model = load(args.model, args.task)
    policy = EnqueuePolicy.beam(args.beam) if args.beam else model.train_policy
    sents = read_corpus(args.input)
    pred = decode_corpus(model.task, sents, model.weights, policy)
    _emit(format_conll(pred), args.output)
    return EXIT_OK


def cmd_eval(args) -> int:
    gold = read_corpus(args.gold)
    pred = read_corpus(args.pred)
    try:
        res = evaluate_corpus(gold, pred)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    if args.json:
        sys.stdout.write(json.dumps(res.as_dict(), indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(res.to_text(joint=args.joint))
    return EXIT_OK


def cmd_beam_sweep(args) -> int:
    templates = make_templates(args)
    train_sents = read_corpus(args.train, args.limit)
    train_sents, heldout = heldout_split(args, train_sents)
    test_sents = read_corpus(args.test, args.test_limit)
    config = learner_config(args, args.train_beams[0])
    result = beam_sweep(args.task, train_sents, test_sents, args.train_beams, args.decode_beams,
                        config, templates, heldout)
    _emit(result.to_text(), args.report)
    if args.report_json:
        Path(args.report_json).write_text(json.dumps(result.as_dict(), indent=2), encoding="utf-8")
    return EXIT_OK


def cmd_verify_bounds(args) -> int:
    rule = make_rule(args)
    lines = []
    checks = []
    if args.synthetic:
        for seed in range(args.seed, args.seed + args.seeds):
            chk = verify_bounds_synthetic(seed, rule, EnqueuePolicy.beam(args.beam), args.max_epochs)
            checks.append(chk)
            lines.append(chk.to_text())
    else:
        templates = make_templates(args)
        sents = read_corpus(args.train, args.subset)
        task = build_task(args.task, sents, templates)
        data = [task.example(s) for s in sents if len(s)]
        chk = verify_bounds_on(task, data, rule, EnqueuePolicy.beam(args.beam), args.max_epochs)
        checks.append(chk)
        lines.append(chk.to_text())
    passed = sum(c.passed for c in checks)
    applicable = sum(c.applicable for c in checks)
    lines.append(f"summary: {passed}/{len(checks)} PASS ({applicable} with a positive margin)")
    _emit("\n".join(lines) + "\n", args.report)
    return EXIT_OK


def cmd_make_fixture(args) -> int:
    Path(args.out).mkdir(parents=True, exist_ok=True)
    write_fixture(args.out, args.train_size, args.test_size)
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------------


def _add_learning(p: argparse.ArgumentParser, beam: bool = True) -> None:
    g = p.add_argument_group("learning")
    g.add_argument("--task", choices=("chunk", "joint"), default="joint")
    g.add_argument("--rule", choices=("perceptron", "alma"), default="alma")
    g.add_argument("--alpha", type=float, default=0.9, help="ALMA alpha in (0, 1] (default 0.9)")
    g.add_argument("--B", type=float, default=None, help="ALMA B (default sqrt(8)/alpha)")
    g.add_argument("--C", type=float, default=None, help="ALMA C (default sqrt(2))")
    if beam:
        g.add_argument("--beam", type=_positive, default=5, help="training beam width (default 5)")
    g.add_argument("--epochs", type=_nonneg, default=None,
                   help="passes over the data (default 8 for perceptron, 3 for ALMA)")
    g.add_argument("--update-mode", choices=("laso", "early_update", "end_only"), default="laso")
    g.add_argument("--bad-set", choices=("queue", "outranking"), default="queue")
    g.add_argument("--no-average", action="store_true", help="decode with the final raw weights")
    g.add_argument("--shuffle", action="store_true", help="shuffle examples every epoch (seeded by --seed)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--templates", help="feature template file (key = value lines)")
    g.add_argument("--heldout", help="held-out corpus used to pick the epoch")
    g.add_argument("--heldout-fraction", type=float, default=0.0,
                   help="hold out this fraction of the training corpus to pick the epoch")
    g.add_argument("--heldout-seed", type=int, default=None,
                   help="sample the held-out part at random (default: the final sentences)")
    g.add_argument("--limit", type=_positive, default=None, help="use only the first N training sentences")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="laso", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="file of key = value lines using the long flag names; flags win")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--train", required=True, help="CoNLL file, '-' or fixture:train")
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--test", help="also decode and score this corpus")
    p.add_argument("--report", help="write the key=value report here instead of stdout")
    p.add_argument("--report-json", help="also write the report as JSON")
    _add_learning(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("decode", help="tag a corpus with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="CoNLL file (chunk column ignored)")
    p.add_argument("--output", help="predictions file (default stdout)")
    p.add_argument("--beam", type=_positive, default=None, help="decode beam (default: the training beam)")
    p.add_argument("--task", choices=("chunk", "joint"), default=None, help="reject models of another task")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--joint", action="store_true", help="also report tag/chunk/joint accuracy")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("beam-sweep", help="F-score matrix over training and decoding beams")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--test-limit", type=_positive, default=None)
    p.add_argument("--train-beams", type=_beams, default=[1, 5])
    p.add_argument("--decode-beams", type=_beams, default=[1, 5])
    p.add_argument("--report")
    p.add_argument("--report-json")
    _add_learning(p, beam=False)
    p.set_defaults(func=cmd_beam_sweep)

    p = sub.add_parser("verify-bounds", help="train to convergence and check the mistake bound")
    p.add_argument("--synthetic", action="store_true", help="use generated separable data")
    p.add_argument("--seeds", type=_positive, default=20, help="number of synthetic seeds")
    p.add_argument("--train", default="fixture:train")
    p.add_argument("--subset", type=_positive, default=1000, help="first N training sentences")
    p.add_argument("--max-epochs", type=_positive, default=50)
    p.add_argument("--report")
    _add_learning(p)
    p.set_defaults(func=cmd_verify_bounds)

    p = sub.add_parser("make-fixture", help="regenerate the bundled fixture corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--train-size", type=_positive, default=1000)
    p.add_argument("--test-size", type=_positive, default=400)
    p.set_defaults(func=cmd_make_fixture)
    return parser


def read_config_file(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} not found")
    out = {}
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{p}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _subparsers(parser: argparse.ArgumentParser) -> dict:
    for act in parser._actions:
        if isinstance(act, argparse._SubParsersAction):
            return act.choices
    return {}


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str], values: dict) -> None:
    """Install config-file values as subcommand defaults, so flags still win."""
    subs = _subparsers(parser)
    command = next((t for t in argv if t in subs), None)
    if command is None:
        return
    subparser = subs[command]
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in values.items():
        act = actions.get(key)
        if act is None or key in ("help", "func", "config"):
            raise ConfigError(f"unknown config key {key!r} for command {command!r}")
        if isinstance(act, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            if raw.lower() not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ConfigError(f"config key {key!r} expects a boolean, got {raw!r}")
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            continue
        if act.choices is not None and raw not in act.choices:
            raise ConfigError(f"config key {key!r}: {raw!r} is not one of {list(act.choices)}")
        try:
            defaults[key] = act.type(raw) if act.type else raw
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from None
        act.required = False
    subparser.set_defaults(**defaults)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        if known.config:
            _apply_config(parser, argv, read_config_file(known.config))
    except ConfigError as exc:
        sys.stderr.write(f"laso: config error: {exc}\n")
        return EXIT_CONFIG
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"laso: config error: {exc}\n")
        return EXIT_CONFIG
    except (DataError, ModelFormatError, FileNotFoundError, UnicodeDecodeError) as exc:
        sys.stderr.write(f"laso: data error: {exc}\n")
        return EXIT_DATA
    except ValueError as exc:
        # tasks reject corpora that do not fit the model or the templates
        sys.stderr.write(f"laso: data error: {exc}\n")
        return EXIT_DATA
    except (TaskContractError, SearchFailure) as exc:
        sys.stderr.write(f"laso: contract violation: {exc}\n")
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())

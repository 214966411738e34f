"""CoNLL-2000 style corpora: reading, writing, BIO/span conversion, metrics."""

from __future__ import annotations

import io
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, NamedTuple, Optional, Sequence, Union

log = logging.getLogger(__name__)


class DataError(ValueError):
    """Malformed corpus input."""


class ChunkSpan(NamedTuple):
    start: int
    end: int  # exclusive
    label: str


@dataclass
class Sentence:
    tokens: list
    pos: list
    chunks: list  # BIO tags

    def __post_init__(self):
        if not (len(self.tokens) == len(self.pos) == len(self.chunks)):
            raise DataError("tokens, POS tags and chunk tags differ in length")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def spans(self) -> list[ChunkSpan]:
        return spans_from_bio(self.chunks)

    @property
    def labels(self) -> list[tuple[str, str]]:
        return list(zip(self.pos, self.chunks))


def _split_tag(tag: str) -> tuple[str, Optional[str]]:
    if tag == "O":
        return "O", None
    if len(tag) > 2 and tag[1] == "-" and tag[0] in "BI":
        return tag[0], tag[2:]
    raise DataError(f"invalid chunk tag {tag!r}")


def repair_bio(tags: Sequence[str]) -> tuple[list[str], int]:
    """Promote every I-X that does not follow B-X or I-X to B-X."""
    out = []
    fixes = 0
    prev_type = None
    for tag in tags:
        kind, typ = _split_tag(tag)
        if kind == "I" and typ != prev_type:
            tag = f"B-{typ}"
            fixes += 1
        out.append(tag)
        prev_type = typ
    return out, fixes


def spans_from_bio(tags: Sequence[str]) -> list[ChunkSpan]:
    """Labeled spans of a well-formed BIO sequence (I-X continues only X)."""
    spans = []
    start = label = None
    for i, tag in enumerate(tags):
        kind, typ = _split_tag(tag)
        if label is not None and (kind != "I" or typ != label):
            spans.append(ChunkSpan(start, i, label))
            start = label = None
        if kind == "B" or (kind == "I" and label is None):
            start, label = i, typ
    if label is not None:
        spans.append(ChunkSpan(start, len(tags), label))
    return spans


def bio_from_spans(spans: Iterable[ChunkSpan], length: int) -> list[str]:
    tags = ["O"] * length
    last_end = 0
    for s in sorted(spans):
        if not 0 <= s.start < s.end <= length:
            raise ValueError(f"span {s} out of bounds for length {length}")
        if s.start < last_end:
            raise ValueError("spans overlap")
        tags[s.start] = f"B-{s.label}"
        for i in range(s.start + 1, s.end):
            tags[i] = f"I-{s.label}"
        last_end = s.end
    return tags


Source = Union[str, Path, bytes, IO]


def _lines(source: Source) -> Iterable[str]:
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, (str, Path)):
        return io.StringIO(Path(source).read_text(encoding="utf-8"))
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return io.StringIO(data)


def read_conll(source: Source, stats: Optional[dict] = None) -> list[Sentence]:
    """Parse 3-column ``token POS chunk`` rows, blank-line separated.

    Ill-formed I- tags are promoted to B-; the number of repairs is logged
    and stored in ``stats["repairs"]`` when a dict is supplied.
    """
    sentences: list[Sentence] = []
    rows: list[list[str]] = []
    repairs = 0

    def flush():
        nonlocal repairs
        if rows:
            chunks, fixed = repair_bio([r[2] for r in rows])
            repairs += fixed
            sentences.append(Sentence([r[0] for r in rows], [r[1] for r in rows], chunks))
            rows.clear()

    for lineno, line in enumerate(_lines(source), start=1):
        line = line.rstrip("\n").rstrip("\r")
        if not line.strip():
            flush()
            continue
        cols = line.split()
        if len(cols) != 3:
            raise DataError(f"line {lineno}: expected 3 columns, found {len(cols)}")
        try:
            _split_tag(cols[2])
        except DataError as exc:
            raise DataError(f"line {lineno}: {exc}") from None
        rows.append(cols)
    flush()
    if repairs:
        log.warning("repaired %d ill-formed BIO tags", repairs)
    if stats is not None:
        stats["repairs"] = repairs
    return sentences


def format_conll(sentences: Iterable[Sentence]) -> str:
    out = []
    for s in sentences:
        for tok, pos, chunk in zip(s.tokens, s.pos, s.chunks):
            out.append(f"{tok} {pos} {chunk}\n")
        out.append("\n")
    return "".join(out)


def write_conll(sentences: Iterable[Sentence], dest: Union[str, Path, IO]) -> None:
    text = format_conll(sentences)
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text, encoding="utf-8")
    else:
        dest.write(text)


def split_heldout(sentences: Sequence, fraction: float = 0.1,
                  seed: Optional[int] = None) -> tuple[list, list]:
    """Split off a held-out tail (or a seeded random sample) of the corpus."""
    if not 0.0 <= fraction < 1.0:
        raise ValueError("fraction must lie in [0, 1)")
    idx = list(range(len(sentences)))
    if seed is not None:
        random.Random(seed).shuffle(idx)
    n_held = int(round(len(idx) * fraction))
    cut = len(idx) - n_held
    train_idx, held_idx = idx[:cut], idx[cut:]
    if seed is not None:
        train_idx.sort()
        held_idx.sort()
    return [sentences[i] for i in train_idx], [sentences[i] for i in held_idx]


@dataclass
class EvalResult:
    gold: int = 0
    predicted: int = 0
    correct: int = 0
    tokens: int = 0
    tag_correct: int = 0
    chunk_tag_correct: int = 0
    joint_correct: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def precision(self) -> float:
        return self.correct / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return self.correct / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    @property
    def tag_accuracy(self) -> float:
        return self.tag_correct / self.tokens if self.tokens else 0.0

    @property
    def chunk_tag_accuracy(self) -> float:
        return self.chunk_tag_correct / self.tokens if self.tokens else 0.0

    @property
    def joint_accuracy(self) -> float:
        return self.joint_correct / self.tokens if self.tokens else 0.0

    def __add__(self, other: "EvalResult") -> "EvalResult":
        return EvalResult(
            self.gold + other.gold,
            self.predicted + other.predicted,
            self.correct + other.correct,
            self.tokens + other.tokens,
            self.tag_correct + other.tag_correct,
            self.chunk_tag_correct + other.chunk_tag_correct,
            self.joint_correct + other.joint_correct,
        )

    def as_dict(self) -> dict:
        return {
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "tag_accuracy": self.tag_accuracy, "chunk_tag_accuracy": self.chunk_tag_accuracy,
            "joint_accuracy": self.joint_accuracy, "gold": self.gold, "predicted": self.predicted,
            "correct": self.correct, "tokens": self.tokens,
        }

    def to_text(self, joint: bool = False) -> str:
        lines = [
            f"precision={100 * self.precision:.2f}",
            f"recall={100 * self.recall:.2f}",
            f"f1={100 * self.f1:.2f}",
        ]
        if joint:
            lines += [
                f"tag_accuracy={100 * self.tag_accuracy:.2f}",
                f"chunk_tag_accuracy={100 * self.chunk_tag_accuracy:.2f}",
                f"joint_accuracy={100 * self.joint_accuracy:.2f}",
            ]
        lines.append(f"gold={self.gold} predicted={self.predicted} correct={self.correct}")
        return "\n".join(lines) + "\n"


def evaluate_chunks(gold: Iterable[ChunkSpan], predicted: Iterable[ChunkSpan]) -> EvalResult:
    """Exact-match span scoring: (start, end, label) must all agree."""
    g = set(map(tuple, gold))
    p = set(map(tuple, predicted))
    if not p:
        log.debug("no predicted chunks; precision defined as 0")
    return EvalResult(gold=len(g), predicted=len(p), correct=len(g & p))


def evaluate_joint(gold: Sentence, predicted: Sentence) -> EvalResult:
    if len(gold) != len(predicted):
        raise ValueError("gold and predicted sentences differ in length")
    res = evaluate_chunks(gold.spans, predicted.spans)
    res.tokens = len(gold)
    for gp, pp, gc, pc in zip(gold.pos, predicted.pos, gold.chunks, predicted.chunks):
        res.tag_correct += gp == pp
        res.chunk_tag_correct += gc == pc
        res.joint_correct += (gp == pp) and (gc == pc)
    return res


def evaluate_corpus(gold: Sequence[Sentence], predicted: Sequence[Sentence]) -> EvalResult:
    """Micro-averaged chunk and tag metrics over aligned sentence lists."""
    if len(gold) != len(predicted):
        raise ValueError(f"{len(gold)} gold sentences but {len(predicted)} predicted")
    total = EvalResult()
    for g, p in zip(gold, predicted):
        if g.tokens != p.tokens:
            raise ValueError("gold and predicted tokens disagree")
        total = total + evaluate_joint(g, p)
    return total

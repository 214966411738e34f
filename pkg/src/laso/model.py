"""Binary model files.

Layout (all integers little-endian)::

    magic         8 bytes   b"LASOMDL\\0"
    version       uint32    FORMAT_VERSION
    header_len    uint32
    header        header_len bytes of UTF-8 JSON (sorted keys, no whitespace)
    n_contexts    uint32
    contexts      n_contexts x (uint32 byte length, UTF-8 bytes)
    n_rows        uint32
    predicates    n_rows x (uint32 byte length, UTF-8 bytes)
    n_weights     uint64    equals n_rows * n_contexts
    weights       n_weights x float64

Feature id ``i`` names ``predicates[i // n_contexts] + "|" + contexts[i % n_contexts]``.
The JSON header holds the format version, the task description (task id,
tag inventories, template switches, gazetteer contents), the update rule
(tag plus alpha/B/C), the training beam, the feature count and the
training report.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Optional

import numpy as np

from .learning import UpdateRule
from .linalg import FeatureIndexer, WeightVector
from .search import EnqueuePolicy
from .tasks import task_from_header

MAGIC = b"LASOMDL\0"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Unreadable or incompatible model file."""


@dataclass
class Model:
    task: object
    weights: WeightVector
    rule: UpdateRule = field(default_factory=UpdateRule.perceptron)
    train_policy: EnqueuePolicy = field(default_factory=lambda: EnqueuePolicy.beam(1))
    report: dict = field(default_factory=dict)

    @property
    def indexer(self) -> FeatureIndexer:
        return self.task.indexer

    def header(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "task": self.task.header(),
            "rule": {"tag": self.rule.tag, "kind": self.rule.kind, "alpha": self.rule.alpha,
                     "B": self.rule.B, "C": self.rule.C},
            "train_beam": str(self.train_policy),
            "feature_count": self.indexer.size,
            "report": self.report,
        }


def _put_str(out: BinaryIO, s: str) -> None:
    b = s.encode("utf-8")
    out.write(struct.pack("<I", len(b)))
    out.write(b)


def _get(buf: BinaryIO, n: int) -> bytes:
    b = buf.read(n)
    if len(b) != n:
        raise ModelFormatError("truncated model file")
    return b


def _get_str(buf: BinaryIO) -> str:
    (n,) = struct.unpack("<I", _get(buf, 4))
    return _get(buf, n).decode("utf-8")


def dumps(model: Model) -> bytes:
    idx = model.indexer
    n = idx.size
    w = model.weights
    values = np.zeros(n, dtype="<f8")
    m = min(n, w.size)
    values[:m] = w.values[:m]
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<I", FORMAT_VERSION))
    header = json.dumps(model.header(), sort_keys=True, separators=(",", ":")).encode("utf-8")
    out.write(struct.pack("<I", len(header)))
    out.write(header)
    out.write(struct.pack("<I", idx.n_contexts))
    for c in idx.contexts:
        _put_str(out, c)
    out.write(struct.pack("<I", idx.n_rows))
    for p in idx.predicates:
        _put_str(out, p)
    out.write(struct.pack("<Q", n))
    out.write(values.tobytes())
    return out.getvalue()


def loads(data: bytes) -> Model:
    buf = io.BytesIO(data)
    if _get(buf, len(MAGIC)) != MAGIC:
        raise ModelFormatError("not a model file (bad magic)")
    (version,) = struct.unpack("<I", _get(buf, 4))
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version} (expected {FORMAT_VERSION})")
    (hlen,) = struct.unpack("<I", _get(buf, 4))
    try:
        header = json.loads(_get(buf, hlen).decode("utf-8"))
    except ValueError as exc:
        raise ModelFormatError(f"corrupt model header: {exc}") from None
    (nctx,) = struct.unpack("<I", _get(buf, 4))
    contexts = [_get_str(buf) for _ in range(nctx)]
    (nrows,) = struct.unpack("<I", _get(buf, 4))
    predicates = [_get_str(buf) for _ in range(nrows)]
    (n,) = struct.unpack("<Q", _get(buf, 8))
    if n != nrows * nctx or n != header.get("feature_count"):
        raise ModelFormatError("weight count disagrees with the feature tables")
    values = np.frombuffer(_get(buf, 8 * n), dtype="<f8").astype(np.float64)
    if buf.read(1):
        raise ModelFormatError("trailing bytes after weights")

    indexer = FeatureIndexer(contexts, predicates)
    indexer.freeze()
    try:
        task = task_from_header(header["task"], indexer)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model header does not describe a known task: {exc}") from None
    r = header["rule"]
    rule = UpdateRule.perceptron() if r["kind"] == "perceptron" else UpdateRule.alma(r["alpha"], r["B"], r["C"])
    weights = WeightVector(values=values)
    weights.frozen = True
    return Model(task, weights, rule, EnqueuePolicy.parse(header["train_beam"]), header.get("report", {}))


def save(model: Model, path: str | Path) -> None:
    Path(path).write_bytes(dumps(model))


def load(path: str | Path, expect_task: Optional[str] = None) -> Model:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"model file {p} not found")
    model = loads(p.read_bytes())
    if expect_task is not None and model.task.name != expect_task:
        raise ModelFormatError(f"model was trained for task {model.task.name!r}, not {expect_task!r}")
    return model

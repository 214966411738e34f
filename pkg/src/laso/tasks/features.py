"""Token-level base features, chunk-level meta features and regex features.

Feature names are flat strings ``template|value``.  Tasks conjoin them with
an output context (label, tag, tag pair) through a ``FeatureIndexer``.
"""

from __future__ import annotations

import configparser
import logging
import math
import re
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

log = logging.getLogger(__name__)

BOS = "<s>"
EOS = "</s>"

# Suffix rules, tried in order; (suffix, replacement, minimum stem length).
STEM_RULES: tuple[tuple[str, str, int], ...] = (
    ("sses", "ss", 2),
    ("ies", "y", 2),
    ("ing", "", 3),
    ("edly", "", 3),
    ("ed", "", 3),
    ("ly", "", 3),
    ("ment", "", 4),
    ("ness", "", 3),
    ("er", "", 3),
    ("est", "", 3),
    ("'s", "", 1),
    ("s", "", 3),
)

REGEXES: tuple[tuple[str, str], ...] = (
    ("INITCAP", r"^[A-Z]"),
    ("ALLCAPS", r"^[A-Z]+$"),
    ("CAPSMIX", r"^[A-Za-z]*[a-z][A-Z][A-Za-z]*$"),
    ("HASDIGIT", r"[0-9]"),
    ("ALLDIGITS", r"^[0-9]+$"),
    ("NUMBER", r"^[0-9][0-9.,]*$"),
    ("FRACTION", r"^[0-9]+/[0-9]+$"),
    ("HASDASH", r"-"),
    ("PUNCT", r"^[^A-Za-z0-9]+$"),
    ("ACRONYM", r"^([A-Z]\.)+$"),
    ("ENDSDOT", r"[A-Za-z]\.$"),
    ("LOWER", r"^[a-z]+$"),
)
_COMPILED = tuple((name, re.compile(rx)) for name, rx in REGEXES)

BASE_TEMPLATES = ("word", "lower", "stem", "word_stem", "case", "affixes", "pos", "pos1", "gazetteer")


def stem(word: str) -> str:
    """Deterministic suffix stripper (see STEM_RULES)."""
    w = word.lower()
    for suffix, repl, min_len in STEM_RULES:
        if w.endswith(suffix) and len(w) - len(suffix) >= min_len:
            return w[: len(w) - len(suffix)] + repl
    return w


def case_pattern(word: str) -> str:
    """Run-length-compressed shape: upper X, lower x, digit d, other o."""
    out = []
    for ch in word:
        if ch.isupper():
            c = "X"
        elif ch.islower():
            c = "x"
        elif ch.isdigit():
            c = "d"
        else:
            c = "o"
        if not out or out[-1] != c:
            out.append(c)
    return "".join(out)


def length_bucket(n: int) -> str:
    return str(int(math.log2(n))) if n > 0 else "0"


def regex_features(word: str) -> list[str]:
    return [f"re|{name}" for name, rx in _COMPILED if rx.search(word)]


def load_gazetteer(path: str | Path) -> Optional[frozenset[str]]:
    """One term per line (UTF-8); None when the file is missing."""
    p = Path(path)
    if not p.exists():
        log.warning("gazetteer %s not found; its membership feature is disabled", p)
        return None
    terms = (line.strip() for line in p.read_text(encoding="utf-8").splitlines())
    return frozenset(t.lower() for t in terms if t and not t.startswith("#"))


def default_gazetteers() -> dict[str, frozenset[str]]:
    text = resources.files("laso.data").joinpath("stopwords.txt").read_text(encoding="utf-8")
    return {"stop": frozenset(t.strip().lower() for t in text.splitlines() if t.strip())}


@dataclass
class FeatureTemplateConfig:
    """Template switches.  ``*_templates`` pick which base templates feed the
    sequence and n-gram meta features."""

    word: bool = True
    lower: bool = True
    stem: bool = True
    word_stem: bool = True
    case: bool = True
    affixes: bool = True
    pos: bool = True
    pos1: bool = True
    gazetteer: bool = True
    chunk_length: bool = True
    chunk_length_bucket: bool = True
    meta_position: bool = True
    meta_context: bool = True
    meta_sequence: bool = True
    meta_ngrams: bool = True
    sequence_templates: tuple = ("lower", "pos", "case")
    ngram_templates: tuple = ("lower", "pos", "case")
    position_cap: int = 4
    window: int = 1
    regex: bool = True
    max_chunk_length: int = 15
    gazetteers: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.max_chunk_length < 1:
            raise ValueError("max_chunk_length must be >= 1")
        if self.window < 0:
            raise ValueError("window must be >= 0")
        self.sequence_templates = tuple(self.sequence_templates)
        self.ngram_templates = tuple(self.ngram_templates)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sequence_templates"] = list(self.sequence_templates)
        d["ngram_templates"] = list(self.ngram_templates)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureTemplateConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown template options: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path: str | Path) -> "FeatureTemplateConfig":
        """Read ``key = value`` lines; ``gazetteer.<name> = <path>`` adds a list."""
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        parser.read_string("[templates]\n" + Path(path).read_text(encoding="utf-8"))
        out: dict = {}
        gaz: dict = {}
        types = {f.name: f.type for f in fields(cls)}
        for key, raw in parser["templates"].items():
            if key.startswith("gazetteer."):
                gaz[key.split(".", 1)[1]] = raw.strip()
                continue
            if key not in types:
                raise ValueError(f"unknown template option {key!r}")
            t = str(types[key])
            if t == "bool":
                out[key] = parser["templates"].getboolean(key)
            elif t == "int":
                out[key] = int(raw)
            elif t == "tuple":
                out[key] = tuple(s.strip() for s in raw.split(",") if s.strip())
            else:
                raise ValueError(f"option {key!r} cannot be set from a file")
        out["gazetteers"] = gaz
        return cls(**out)


def resolve_gazetteers(config: FeatureTemplateConfig) -> dict[str, frozenset[str]]:
    """Built-in stop-word list plus any configured files that exist."""
    if not config.gazetteer:
        return {}
    out = default_gazetteers()
    for name, path in config.gazetteers.items():
        terms = load_gazetteer(path)
        if terms is not None:
            out[name] = terms
    return out


def token_values(word: str, pos: Optional[str], config: FeatureTemplateConfig,
                 gazetteers: dict[str, frozenset[str]]) -> list[tuple[str, str]]:
    """(template, value) pairs describing one token."""
    out: list[tuple[str, str]] = []
    lw = word.lower()
    if config.word:
        out.append(("w", word))
    if config.lower:
        out.append(("lw", lw))
    st = stem(word) if (config.stem or config.word_stem) else ""
    if config.stem:
        out.append(("st", st))
    if config.word_stem:
        out.append(("ws", f"{word}+{st}"))
    if config.case:
        out.append(("cp", case_pattern(word)))
    if config.affixes:
        for n in (1, 2, 3):
            if len(word) >= n:
                out.append((f"p{n}", word[:n]))
                out.append((f"s{n}", word[-n:]))
    if pos is not None:
        if config.pos:
            out.append(("pos", pos))
        if config.pos1:
            out.append(("pos1", pos[:1]))
    for name in sorted(gazetteers):
        if lw in gazetteers[name]:
            out.append(("gz", name))
    return out


_TEMPLATE_PREFIX = {
    "word": ("w",), "lower": ("lw",), "stem": ("st",), "word_stem": ("ws",), "case": ("cp",),
    "affixes": ("p1", "p2", "p3", "s1", "s2", "s3"), "pos": ("pos",), "pos1": ("pos1",), "gazetteer": ("gz",),
}


def extract_base_features(sentence, index: int, config: FeatureTemplateConfig | None = None,
                          gazetteers: dict[str, frozenset[str]] | None = None,
                          use_pos: bool = True) -> list[str]:
    """Names of the base features of token ``index``."""
    config = config or FeatureTemplateConfig()
    if gazetteers is None:
        gazetteers = resolve_gazetteers(config)
    if not 0 <= index < len(sentence.tokens):
        raise IndexError(index)
    pos = sentence.pos[index] if use_pos else None
    return [f"{t}|{v}" for t, v in token_values(sentence.tokens[index], pos, config, gazetteers)]


def meta_predicates(values: Sequence[list[tuple[str, str]]], start: int, end: int,
                    config: FeatureTemplateConfig) -> list[str]:
    """Chunk-level features of the span ``[start, end)``.

    ``values`` holds the per-token (template, value) lists of the sentence.
    Emits: chunk length, each base feature at each sub-position (counted from
    the start up to ``position_cap`` and at the last token), base features of
    the tokens just before and after the span, the whole value sequence of
    selected templates, and bags of 2- and 3-grams of selected templates.
    """
    n = len(values)
    length = end - start
    out: list[str] = []
    if config.chunk_length:
        out.append(f"len|{length}")
    if config.chunk_length_bucket:
        out.append(f"lenb|{length_bucket(length)}")
    if config.meta_position:
        for k in range(min(length, config.position_cap)):
            out.extend(f"{t}@{k}|{v}" for t, v in values[start + k])
        out.extend(f"{t}@-1|{v}" for t, v in values[end - 1])
    if config.meta_context:
        if start > 0:
            out.extend(f"{t}<|{v}" for t, v in values[start - 1])
        else:
            out.append(f"<|{BOS}")
        if end < n:
            out.extend(f"{t}>|{v}" for t, v in values[end])
        else:
            out.append(f">|{EOS}")
    seq_keys = {p for t in config.sequence_templates for p in _TEMPLATE_PREFIX.get(t, (t,))}
    gram_keys = {p for t in config.ngram_templates for p in _TEMPLATE_PREFIX.get(t, (t,))}
    if config.meta_sequence or config.meta_ngrams:
        columns: dict[str, list[str]] = {}
        for i in range(start, end):
            for t, v in values[i]:
                if t in seq_keys or t in gram_keys:
                    columns.setdefault(t, []).append(v)
        for t in sorted(columns):
            col = columns[t]
            if config.meta_sequence and t in seq_keys and len(col) == length:
                out.append(f"{t}*|{' '.join(col)}")
            if config.meta_ngrams and t in gram_keys and len(col) == length:
                for i in range(length - 1):
                    out.append(f"{t}2|{col[i]} {col[i + 1]}")
                for i in range(length - 2):
                    out.append(f"{t}3|{col[i]} {col[i + 1]} {col[i + 2]}")
    return out


def window_predicates(values: Sequence[list[tuple[str, str]]], words: Sequence[str], index: int,
                      config: FeatureTemplateConfig) -> list[str]:
    """Per-position predicates for word-at-a-time tagging: the token's base
    features, the neighbours' base features within ``window``, regexes and a
    bias feature."""
    out = ["bias|1"]
    out.extend(f"{t}|{v}" for t, v in values[index])
    for off in range(1, config.window + 1):
        for j, tag in ((index - off, f"-{off}"), (index + off, f"+{off}")):
            if 0 <= j < len(values):
                out.extend(f"{t}{tag}|{v}" for t, v in values[j] if t in ("w", "lw", "cp", "s2", "s3", "gz"))
            else:
                out.append(f"edge{tag}|{BOS if j < 0 else EOS}")
    if config.regex:
        out.extend(regex_features(words[index]))
    return out

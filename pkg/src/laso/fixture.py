"""A small generated corpus in CoNLL-2000 format for tests and desk-scale runs.

Sentences come from a clause grammar over Penn-style POS tags with
CoNLL-style chunks (NP, VP, PP, ADJP, ADVP, SBAR, PRT).  The lexicon mixes
a fixed core of function and content words (several of them ambiguous,
e.g. ``plans`` NNS/VBZ, ``that`` DT/IN/WDT, ``up`` RP/IN) with generated
nonce words, sampled with Zipfian frequencies so held-out text contains
unseen words.
"""

from __future__ import annotations

import random
from importlib import resources
from pathlib import Path
from typing import Optional

from .corpus import Sentence, bio_from_spans, ChunkSpan, read_conll, write_conll

SPLITS = {"train": "fixture_train.txt", "test": "fixture_test.txt"}
TRAIN_SEED = 2005
TEST_SEED = 4042

_DET = ["the", "a", "an", "this", "some", "that", "any", "each", "no", "every", "these"]
_POSS = ["its", "their", "his", "her", "our"]
_PRON = ["it", "he", "they", "we", "she", "I", "you"]
_MODAL = ["will", "would", "could", "may", "might", "should", "can"]
_PREP = ["in", "of", "for", "on", "with", "at", "by", "from", "about", "after", "into", "than", "over", "under", "up", "down"]
_SUB = ["because", "while", "although", "if", "since", "whether"]
_CONJ = ["and", "but", "or"]
_ADV = ["also", "still", "only", "recently", "already", "now", "even", "just", "currently", "probably",
        "sharply", "slightly", "quickly", "there", "here", "later", "too", "again", "quite", "very"]
_PRT = ["up", "out", "down", "off", "back"]
_PHRASAL = ["set", "take", "pick", "cut", "turn", "bring", "sell", "pay", "give", "shut"]
_NUM_WORDS = ["two", "three", "five", "ten", "million", "billion", "hundred", "dozen", "one", "four"]
_TITLES = ["Mr.", "Mrs.", "Ms.", "Dr."]
# words used both as plural noun and as present-tense verb
_AMBIGUOUS = ["plan", "cut", "report", "offer", "trade", "change", "increase", "control", "estimate", "rise",
              "bid", "deal", "issue", "fund", "result", "demand", "cost", "show"]

# base form, third person, past, past participle, gerund
_VERBS = [
    ("say", "says", "said", "said", "saying"), ("make", "makes", "made", "made", "making"),
    ("buy", "buys", "bought", "bought", "buying"), ("sell", "sells", "sold", "sold", "selling"),
    ("plan", "plans", "planned", "planned", "planning"), ("report", "reports", "reported", "reported", "reporting"),
    ("increase", "increases", "increased", "increased", "increasing"), ("cut", "cuts", "cut", "cut", "cutting"),
    ("rise", "rises", "rose", "risen", "rising"), ("offer", "offers", "offered", "offered", "offering"),
    ("expect", "expects", "expected", "expected", "expecting"), ("trade", "trades", "traded", "traded", "trading"),
    ("close", "closes", "closed", "closed", "closing"), ("control", "controls", "controlled", "controlled", "controlling"),
    ("change", "changes", "changed", "changed", "changing"), ("take", "takes", "took", "taken", "taking"),
    ("give", "gives", "gave", "given", "giving"), ("pay", "pays", "paid", "paid", "paying"),
    ("set", "sets", "set", "set", "setting"), ("hold", "holds", "held", "held", "holding"),
    ("turn", "turns", "turned", "turned", "turning"), ("bring", "brings", "brought", "brought", "bringing"),
    ("pick", "picks", "picked", "picked", "picking"), ("shut", "shuts", "shut", "shut", "shutting"),
    ("fall", "falls", "fell", "fallen", "falling"), ("show", "shows", "showed", "shown", "showing"),
    ("need", "needs", "needed", "needed", "needing"), ("help", "helps", "helped", "helped", "helping"),
    ("estimate", "estimates", "estimated", "estimated", "estimating"), ("approve", "approves", "approved", "approved", "approving"),
]
# nouns whose singular and plural double as verb forms
_NOUNS = ["company", "market", "share", "price", "year", "stock", "rate", "sale", "plan", "report",
          "increase", "cut", "rise", "trade", "offer", "deal", "control", "change", "investor", "bank",
          "government", "bond", "profit", "quarter", "month", "week", "analyst", "group", "unit", "firm",
          "issue", "loss", "business", "index", "dollar", "fund", "board", "official", "executive", "estimate",
          "bid", "case", "interest", "cost", "result", "program", "contract", "product", "demand", "level"]
_ADJ = ["new", "big", "high", "federal", "other", "last", "major", "many", "financial", "first",
        "early", "late", "few", "strong", "low", "long", "foreign", "recent", "net", "chief",
        "open", "close", "likely", "able", "due", "free", "past", "own", "third", "real"]
_NNP = ["Corp.", "Inc.", "Co.", "Japan", "York", "New", "U.S.", "Bush", "Congress", "Treasury",
        "Street", "Wall", "Friday", "Monday", "October", "Exchange", "Stock", "Journal", "Jones", "Smith"]

_ONSETS = ["b", "bl", "br", "c", "cl", "cr", "d", "dr", "f", "fl", "fr", "g", "gl", "gr", "h", "j", "k",
           "l", "m", "n", "p", "pl", "pr", "r", "s", "sl", "sp", "st", "t", "tr", "v", "w", "z"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ea", "ou", "io"]
_CODAS = ["", "n", "m", "r", "l", "s", "t", "nd", "rt", "ck", "x", "ng"]


def _syllable(rng: random.Random) -> str:
    return rng.choice(_ONSETS) + rng.choice(_VOWELS) + rng.choice(_CODAS)


def _nonce(rng: random.Random, suffixes: list[str]) -> str:
    stem = "".join(_syllable(rng) for _ in range(rng.choice((1, 2, 2, 3))))
    return stem + rng.choice(suffixes)


class Zipf:
    """Draws from a list with probability proportional to 1/rank**s."""

    def __init__(self, items: list, s: float = 1.0):
        self.items = list(items)
        self.weights = [1.0 / (r + 1) ** s for r in range(len(self.items))]

    def draw(self, rng: random.Random):
        return rng.choices(self.items, self.weights)[0]


def _plural(noun: str) -> str:
    if noun.endswith("y") and noun[-2:-1] not in "aeiou":
        return noun[:-1] + "ies"
    if noun.endswith(("s", "x", "ch", "sh")):
        return noun + "es"
    return noun + "s"


class FixtureGenerator:
    """Seeded clause grammar; ``sentence()`` returns one tagged, chunked sentence."""

    def __init__(self, seed: int, nonce_per_class: int = 400, lexicon_seed: int = 7, garden_rate: float = 0.15):
        self.garden_rate = garden_rate
        lex = random.Random(lexicon_seed)
        nonce_nouns = [_nonce(lex, ["tion", "ment", "ity", "er", "ness", "ism", "", "", "ant"]) for _ in range(nonce_per_class)]
        nonce_adj = [_nonce(lex, ["al", "ous", "ive", "ic", "able", "ful", "ish", ""]) for _ in range(nonce_per_class // 2)]
        nonce_verbs = [_nonce(lex, ["ize", "ate", "ify", "", "en"]) for _ in range(nonce_per_class // 2)]
        nonce_names = [_nonce(lex, ["", "son", "ton", "co", "ex"]).capitalize() for _ in range(nonce_per_class // 2)]
        nonce_adv = [a + "ly" for a in nonce_adj[: nonce_per_class // 8] if not a.endswith("ly")]
        # interleave core and nonce words so frequent ranks are mostly core
        self.nouns = Zipf(_interleave(_NOUNS, nonce_nouns), 1.05)
        self.adjs = Zipf(_interleave(_ADJ, nonce_adj), 1.05)
        verbs = list(_VERBS)
        for v in nonce_verbs:
            base = v[:-1] if v.endswith("e") else v
            verbs.append((v, v + "s", base + "ed", base + "ed", base + "ing"))
        self.verbs = Zipf(verbs, 1.0)
        self.names = Zipf(_interleave(_NNP, nonce_names), 1.0)
        self.advs = Zipf(_ADV + nonce_adv, 1.1)
        self.dets = Zipf(_DET, 1.2)
        self.preps = Zipf(_PREP, 1.0)
        self.rng = random.Random(seed)

    # -- phrase builders: each returns a list of (token, pos) and chunk label or None

    def _np(self) -> list:
        r = self.rng
        u = r.random()
        if u < 0.12:
            return [("PRP", r.choice(_PRON))]
        if u < 0.27:
            n = r.choice((1, 1, 2, 2, 3))
            out = []
            if r.random() < 0.15:
                out.append(("NNP", r.choice(_TITLES)))
            out += [("NNP", self.names.draw(r)) for _ in range(n)]
            return out
        if u < 0.37:
            out = []
            if r.random() < 0.4:
                out.append(("$", "$"))
            out.append(("CD", self._number()))
            if r.random() < 0.3:
                out.append(("CD", r.choice(["million", "billion"])))
            if out[0][0] != "$" or r.random() < 0.3:
                out.append(("NNS", _plural(self.nouns.draw(r))))
            return out
        out = []
        v = r.random()
        if v < 0.55:
            d = self.dets.draw(r)
            out.append(("DT", d))
        elif v < 0.7:
            out.append(("PRP$", r.choice(_POSS)))
        n_adj = r.choices((0, 1, 2), (0.5, 0.38, 0.12))[0]
        for _ in range(n_adj):
            if r.random() < 0.1:
                out.append(("RB", r.choice(["very", "most", "more"])))
            out.append(("JJ", self.adjs.draw(r)))
        if r.random() < 0.25:
            out.append(("NN", self.nouns.draw(r)))
        noun = self.nouns.draw(r)
        plural = r.random() < 0.35 or (out and out[0][1] in ("these",))
        if out and out[0][1] in ("a", "an", "this", "each", "every"):
            plural = False
        out.append(("NNS", _plural(noun)) if plural else ("NN", noun))
        return out

    def _number(self) -> str:
        r = self.rng
        u = r.random()
        if u < 0.4:
            return str(r.randint(2, 999))
        if u < 0.6:
            return f"{r.randint(1, 99)}.{r.randint(1, 9)}"
        if u < 0.7:
            return f"{r.randint(1, 9)}/{r.randint(2, 32)}"
        return r.choice(_NUM_WORDS)

    def _vp(self, person3: bool) -> tuple[list, str]:
        """Verb group and the kind of complement it licenses."""
        r = self.rng
        verb = self.verbs.draw(r)
        u = r.random()
        out = []
        if u < 0.3:
            form = ("VBZ", verb[1]) if person3 else ("VBP", verb[0])
            if r.random() < 0.3:
                form = ("VBD", verb[2])
            out.append(form)
        elif u < 0.45:
            out.append(("MD", r.choice(_MODAL)))
            if r.random() < 0.2:
                out.append(("RB", r.choice(["not", "also", "still"])))
            out.append(("VB", verb[0]))
        elif u < 0.6:
            out.append(("VBZ", "has") if person3 else ("VBP", "have"))
            if r.random() < 0.25:
                out.append(("RB", r.choice(["already", "also", "not"])))
            out.append(("VBN", verb[3]))
        elif u < 0.72:
            out.append(("VBZ", "is") if person3 else ("VBP", "are"))
            out.append(("VBG", verb[4]))
        elif u < 0.85:
            first = self.verbs.draw(r)
            out.append(("VBZ", first[1]) if person3 and r.random() < 0.5 else ("VBD", first[2]))
            out.append(("TO", "to"))
            out.append(("VB", verb[0]))
        else:
            out.append(("VBD", verb[2]))
        return out, verb[0]

    def _garden_path(self) -> list:
        """``DT N Xs Y ...`` with X and Y both noun/verb ambiguous.

        Either ``N Xs`` is the subject and Y the verb (``the bank cuts cost
        the firm ...``) or Xs is the verb and Y a bare object (``the bank
        cuts cost in ...``).  Only the word after Y tells them apart.
        """
        r = self.rng
        subj = [("DT", self.dets.draw(r))]
        if r.random() < 0.3:
            subj.append(("JJ", self.adjs.draw(r)))
        subj.append(("NN", r.choice(_NOUNS)))
        x = _plural(r.choice(_AMBIGUOUS))
        y = r.choice(_AMBIGUOUS)
        if r.random() < 0.5:
            parts = [("NP", subj + [("NNS", x)]), ("VP", [("VBP", y)]), ("NP", self._np())]
        else:
            parts = [("NP", subj), ("VP", [("VBZ", x)]), ("NP", [("NN", y)])]
        return parts + self._tail(1)

    def _clause(self, depth: int) -> list:
        """List of (chunk_label_or_None, [(pos, token), ...])."""
        r = self.rng
        if r.random() < self.garden_rate:
            return self._garden_path()
        parts = []
        subj = self._np()
        parts.append(("NP", subj))
        person3 = subj[-1][0] in ("NN", "NNP") or subj[-1][1] in ("it", "he", "she")
        if r.random() < 0.12:
            parts.append(("ADVP", [("RB", self.advs.draw(r))]))
        u = r.random()
        if u < 0.12:
            cop = ("VBZ", "is") if person3 else ("VBP", "are")
            if r.random() < 0.4:
                cop = ("VBD", "was" if person3 else "were")
            parts.append(("VP", [cop]))
            adjp = [("JJ", self.adjs.draw(r))]
            if r.random() < 0.3:
                adjp.insert(0, ("RB", r.choice(["very", "more", "less", "too"])))
            parts.append(("ADJP", adjp))
            return parts + self._tail(depth)
        vg, base = self._vp(person3)
        parts.append(("VP", vg))
        if base in _PHRASAL and r.random() < 0.5:
            parts.append(("PRT", [("RP", r.choice(_PRT))]))
        v = r.random()
        if v < 0.15 and depth < 1 and vg[-1][1] in ("said", "says", "expected", "reported", "showed", "estimated"):
            parts.append(("SBAR", [("IN", "that")]))
            return parts + self._clause(depth + 1)
        if v < 0.85:
            parts.append(("NP", self._np()))
        return parts + self._tail(depth)

    def _tail(self, depth: int) -> list:
        r = self.rng
        parts = []
        for _ in range(r.choices((0, 1, 2), (0.4, 0.45, 0.15))[0]):
            parts.append(("PP", [("IN", self.preps.draw(r))]))
            parts.append(("NP", self._np()))
            if r.random() < 0.1:
                parts.append(("NP", [("WDT", "that")]))
                vg, _ = self._vp(True)
                parts.append(("VP", vg))
                parts.append(("NP", self._np()))
        if r.random() < 0.1:
            parts.append(("ADVP", [("RB", self.advs.draw(r))]))
        if depth == 0 and r.random() < 0.12:
            parts.append((None, [(",", ",")]))
            parts.append(("SBAR", [("IN", r.choice(_SUB))]))
            parts += self._clause(depth + 1)
        return parts

    def sentence(self) -> Sentence:
        r = self.rng
        parts = []
        if r.random() < 0.1:
            parts.append(("ADVP", [("RB", self.advs.draw(r))]))
            parts.append((None, [(",", ",")]))
        elif r.random() < 0.1:
            parts.append(("PP", [("IN", self.preps.draw(r))]))
            parts.append(("NP", self._np()))
            parts.append((None, [(",", ",")]))
        parts += self._clause(0)
        if r.random() < 0.2:
            parts.append((None, [(",", ",")]))
            parts.append((None, [("CC", r.choice(_CONJ))]))
            parts += self._clause(1)
        parts.append((None, [(".", ".")]))
        tokens, pos, spans = [], [], []
        for label, items in parts:
            start = len(tokens)
            for p, t in items:
                if not tokens and p not in ("NNP", "PRP") and t != "I":
                    t = t[:1].upper() + t[1:]
                tokens.append(t)
                pos.append(p)
            if label is not None:
                spans.append(ChunkSpan(start, len(tokens), label))
        return Sentence(tokens, pos, bio_from_spans(spans, len(tokens)))


def _interleave(core: list, extra: list) -> list:
    out = []
    ci, ei = iter(core), iter(extra)
    for i in range(len(core) + len(extra)):
        src = ci if i % 3 != 2 else ei
        item = next(src, None)
        if item is None:
            item = next(ei if src is ci else ci, None)
        if item is not None:
            out.append(item)
    return out


def generate_corpus(n: int, seed: int) -> list[Sentence]:
    gen = FixtureGenerator(seed)
    return [gen.sentence() for _ in range(n)]


def fixture_path(split: str) -> Path:
    if split not in SPLITS:
        raise ValueError(f"unknown fixture split {split!r}; expected one of {sorted(SPLITS)}")
    return Path(str(resources.files("laso.data").joinpath(SPLITS[split])))


def load_fixture(split: str, limit: Optional[int] = None) -> list[Sentence]:
    sents = read_conll(fixture_path(split))
    return sents if limit is None else sents[:limit]


def write_fixture(directory: str | Path, n_train: int = 1000, n_test: int = 400) -> None:
    """Regenerate the bundled fixture files."""
    d = Path(directory)
    write_conll(generate_corpus(n_train, TRAIN_SEED), d / SPLITS["train"])
    write_conll(generate_corpus(n_test, TEST_SEED), d / SPLITS["test"])

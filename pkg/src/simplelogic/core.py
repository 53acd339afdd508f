"""Domain types for SimpleLogic examples and constraint validation.

Predicates are plain ``int`` indices into a :class:`Vocabulary`. Rules are
named tuples; theories and examples are frozen dataclasses, so everything
can be shared freely between worker processes.
"""

from __future__ import annotations

import enum
import gzip
import io
import json
import os
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

VOCAB_SIZE = 150
MIN_PREDS = 5
MAX_PREDS = 30
MAX_BODY = 3
RULES_PER_PRED = 4

VOCAB_ENV = "SIMPLELOGIC_VOCAB"

PredicateId = int


class SamplerTag(str, enum.Enum):
    RP = "RP"
    LP = "LP"
    LPSTAR = "LPSTAR"
    UNIFORM = "UNIFORM"


class Vocabulary:
    """Fixed, ordered list of 150 single-token adjectives."""

    def __init__(self, words: Sequence[str]):
        words = tuple(words)
        if len(words) != VOCAB_SIZE:
            raise ValueError(f"vocabulary must hold exactly {VOCAB_SIZE} words, got {len(words)}")
        if len(set(words)) != len(words):
            dupes = sorted(w for w, c in Counter(words).items() if c > 1)
            raise ValueError(f"duplicate vocabulary entries: {dupes}")
        for w in words:
            if not w or any(ch.isspace() for ch in w) or w != w.lower():
                raise ValueError(f"invalid vocabulary entry {w!r}")
        self.words = words
        self._index = {w: i for i, w in enumerate(words)}

    def __len__(self) -> int:
        return len(self.words)

    def __getitem__(self, pid: PredicateId) -> str:
        return self.words[pid]

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def index(self, word: str) -> PredicateId:
        return self._index[word]

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "Vocabulary":
        text = Path(path).read_text(encoding="utf-8")
        return cls([line.strip() for line in text.splitlines() if line.strip()])

    @classmethod
    def default(cls) -> "Vocabulary":
        """The packaged list, or the file named by ``$SIMPLELOGIC_VOCAB``."""
        override = os.environ.get(VOCAB_ENV)
        if override:
            return cls.from_file(override)
        return _packaged_vocabulary()


_PACKAGED: Vocabulary | None = None


def _packaged_vocabulary() -> Vocabulary:
    global _PACKAGED
    if _PACKAGED is None:
        text = resources.files("simplelogic").joinpath("data/vocab.txt").read_text(encoding="utf-8")
        _PACKAGED = Vocabulary([line.strip() for line in text.splitlines() if line.strip()])
    return _PACKAGED


class Rule(NamedTuple):
    """Definite clause ``body[0] & ... & body[-1] -> head``."""

    body: tuple[PredicateId, ...]
    head: PredicateId


@dataclass(frozen=True)
class Theory:
    """Facts plus rules over a set of predicates.

    ``facts`` and ``rules`` keep their storage order (it is what gets
    rendered); ``predicates`` is the set of predicates in play.
    """

    predicates: frozenset[PredicateId]
    facts: tuple[PredicateId, ...]
    rules: tuple[Rule, ...]

    def __post_init__(self):
        object.__setattr__(self, "predicates", frozenset(self.predicates))
        object.__setattr__(self, "facts", tuple(self.facts))
        object.__setattr__(self, "rules", tuple(self.rules))

    @classmethod
    def build(
        cls,
        facts: Iterable[PredicateId],
        rules: Iterable[Rule | tuple],
        extra: Iterable[PredicateId] = (),
    ) -> "Theory":
        """Theory whose predicate set is exactly what appears in it (plus ``extra``)."""
        facts = tuple(facts)
        rules = tuple(r if isinstance(r, Rule) else Rule(tuple(r[0]), r[1]) for r in rules)
        preds = set(facts) | set(extra)
        for r in rules:
            preds.update(r.body)
            preds.add(r.head)
        return cls(frozenset(preds), facts, rules)


@dataclass(frozen=True)
class Example:
    theory: Theory
    query: PredicateId
    label: bool
    depth: int
    sampler: SamplerTag = SamplerTag.UNIFORM

    def to_json(self) -> dict:
        return {
            "preds": sorted(self.theory.predicates),
            "facts": list(self.theory.facts),
            "rules": [[list(r.body), r.head] for r in self.theory.rules],
            "query": self.query,
            "label": int(self.label),
            "depth": self.depth,
            "sampler": self.sampler.value,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Example":
        try:
            rules = tuple(Rule(tuple(int(x) for x in body), int(head)) for body, head in obj["rules"])
            theory = Theory(
                frozenset(int(p) for p in obj["preds"]),
                tuple(int(f) for f in obj["facts"]),
                rules,
            )
            label = obj["label"]
            if label not in (0, 1, True, False):
                raise ValueError(f"label must be 0 or 1, got {label!r}")
            return cls(theory, int(obj["query"]), bool(label), int(obj["depth"]), SamplerTag(obj["sampler"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed example record: {exc}") from exc


@dataclass
class Dataset:
    examples: list[Example]
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[Example]:
        return iter(self.examples)

    def depth_counts(self) -> dict[int, int]:
        return dict(sorted(Counter(e.depth for e in self.examples).items()))


# ---------------------------------------------------------------- validation


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, detail: str) -> None:
        self.violations.append(f"{code}: {detail}")

    def codes(self) -> set[str]:
        return {v.split(":", 1)[0] for v in self.violations}


def validate_example(
    example: Example,
    *,
    permissive_facts: bool = False,
    check_solver: bool = True,
    depth_cap: int | None = None,
) -> ValidationReport:
    """Report every violated problem-space constraint (empty report when valid).

    With ``permissive_facts`` a theory may carry zero facts.
    """
    report = ValidationReport()
    th = example.theory
    n = len(th.predicates)

    for p in th.predicates:
        if not (isinstance(p, int) and 0 <= p < VOCAB_SIZE):
            report.add("predicate-range", f"predicate {p!r} outside vocabulary")
    if not MIN_PREDS <= n <= MAX_PREDS:
        report.add("pred-count", f"{n} predicates, expected {MIN_PREDS}..{MAX_PREDS}")

    min_facts = 0 if permissive_facts else 1
    if not min_facts <= len(th.facts) <= n:
        report.add("fact-count", f"{len(th.facts)} facts, expected {min_facts}..{n}")
    if len(set(th.facts)) != len(th.facts):
        report.add("duplicate-fact", "facts repeat a predicate")
    if len(th.rules) > RULES_PER_PRED * n:
        report.add("rule-count", f"{len(th.rules)} rules exceeds {RULES_PER_PRED}*{n}")

    mentioned = set(th.facts)
    for i, r in enumerate(th.rules):
        if not 1 <= len(r.body) <= MAX_BODY:
            report.add("body-size", f"rule {i} has {len(r.body)} body predicates")
        if len(set(r.body)) != len(r.body):
            report.add("body-duplicate", f"rule {i} repeats a body predicate")
        if r.head in r.body:
            report.add("head-in-body", f"rule {i} head {r.head} occurs in its body")
        mentioned.update(r.body)
        mentioned.add(r.head)
    stray = mentioned - th.predicates
    if stray:
        report.add("unknown-predicate", f"predicates {sorted(stray)} not in theory.predicates")
    if example.query not in th.predicates:
        report.add("query", f"query {example.query} not in theory.predicates")

    if example.depth < 0:
        report.add("depth-range", f"negative depth {example.depth}")

    if check_solver and not report.violations:
        from .solver import DEFAULT_CAP, label_and_depth

        cap = DEFAULT_CAP if depth_cap is None else depth_cap
        label, depth = label_and_depth(th, example.query, cap=cap)
        if label != example.label:
            report.add("label-mismatch", f"stored {example.label}, solver {label}")
        elif depth != example.depth:
            report.add("depth-mismatch", f"stored {example.depth}, solver {depth}")
    return report


# ---------------------------------------------------------------------- I/O


def _open_text(path: str | os.PathLike, mode: str) -> io.TextIOBase:
    if str(path).endswith(".gz"):
        if mode == "w":
            # no name or timestamp in the header, so equal data gives equal bytes
            raw = gzip.GzipFile(filename="", mode="wb", fileobj=open(path, "wb"), mtime=0)
            raw.myfileobj = raw.fileobj  # close the underlying file with the wrapper
            return io.TextIOWrapper(raw, encoding="utf-8")
        return gzip.open(path, mode + "t", encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def dumps_example(example: Example) -> str:
    return json.dumps(example.to_json(), separators=(",", ":"))


def write_jsonl(path: str | os.PathLike, examples: Iterable[Example]) -> int:
    """Write one example per line; ``.gz`` paths are gzip-compressed."""
    n = 0
    with _open_text(path, "w") as fh:
        for ex in examples:
            fh.write(dumps_example(ex))
            fh.write("\n")
            n += 1
    return n


class DataError(ValueError):
    """Malformed input data, with the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def iter_jsonl(path: str | os.PathLike) -> Iterator[Example]:
    with _open_text(path, "r") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield Example.from_json(json.loads(line))
            except (ValueError, json.JSONDecodeError) as exc:
                raise DataError(str(exc), lineno) from exc


def read_jsonl(path: str | os.PathLike) -> list[Example]:
    return list(iter_jsonl(path))

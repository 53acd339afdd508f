"""Templated English for examples, and the inverse parser.

Two phrasings are supported:

``APPENDIXD`` (default)::

    Rules: If messy and lonely, then shiny. If tame, then friendly.
    Facts: Alice shiny. Alice tender.
    Query: Alice is dull ?

``SECTION21``::

    Alice is shiny. Alice is tender.
    messy and lonely, shiny. tame, friendly.
    Query: Alice is dull.

Either may be followed by ``Label:``, ``Proof Depth:`` and ``From:`` lines.
The parser works sentence by sentence, so line breaks and repeated spaces
are not significant, and labels and depths are always recomputed by the
solver.
"""

from __future__ import annotations

import enum
import random
import re
from dataclasses import dataclass
from typing import Iterator

from .core import Example, Rule, SamplerTag, Theory, Vocabulary
from .solver import DEFAULT_CAP, label_and_depth

CLS = "[CLS]"
SEP = "[SEP]"


class Profile(str, enum.Enum):
    SECTION21 = "SECTION21"
    APPENDIXD = "APPENDIXD"


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, sentence: int | None = None):
        self.line = line
        self.sentence = sentence
        self.detail = message
        where = []
        if line is not None:
            where.append(f"line {line}")
        if sentence is not None:
            where.append(f"sentence {sentence}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


# ----------------------------------------------------------------- render


def _fact(word: str, profile: Profile) -> str:
    return f"Alice is {word}." if profile is Profile.SECTION21 else f"Alice {word}."


def _rule(body: list[str], head: str, profile: Profile) -> str:
    lhs = " and ".join(body)
    return f"{lhs}, {head}." if profile is Profile.SECTION21 else f"If {lhs}, then {head}."


def _query(word: str, profile: Profile) -> str:
    return f"Query: Alice is {word}." if profile is Profile.SECTION21 else f"Query: Alice is {word} ?"


def _parts(example: Example, profile: Profile, vocab: Vocabulary, rng: random.Random | None):
    facts = list(example.theory.facts)
    rules = list(example.theory.rules)
    if rng is not None:
        rng.shuffle(facts)
        rng.shuffle(rules)
    fact_text = " ".join(_fact(vocab[f], profile) for f in facts)
    rule_text = " ".join(_rule([vocab[b] for b in r.body], vocab[r.head], profile) for r in rules)
    return fact_text, rule_text, _query(vocab[example.query], profile)


def render_example(
    example: Example,
    profile: Profile | str = Profile.APPENDIXD,
    vocabulary: Vocabulary | None = None,
    *,
    with_answer: bool = False,
    rng: random.Random | None = None,
) -> str:
    """Text for one example, facts and rules in stored order unless ``rng`` shuffles them."""
    profile = Profile(profile)
    vocab = vocabulary or Vocabulary.default()
    facts, rules, query = _parts(example, profile, vocab, rng)
    if profile is Profile.APPENDIXD:
        lines = [f"Rules: {rules}".rstrip(), f"Facts: {facts}".rstrip(), query]
    else:
        lines = [s for s in (facts, rules) if s] + [query]
    if with_answer:
        lines += [
            f"Label: {example.label}",
            f"Proof Depth: {example.depth}",
            f"From: {example.sampler.value}",
        ]
    return "\n".join(lines)


def render_model_input(
    example: Example,
    profile: Profile | str = Profile.SECTION21,
    vocabulary: Vocabulary | None = None,
) -> str:
    """``[CLS] facts rules [SEP] query [SEP]`` as a single line."""
    profile = Profile(profile)
    vocab = vocabulary or Vocabulary.default()
    facts, rules, query = _parts(example, profile, vocab, None)
    context = " ".join(s for s in (facts, rules) if s)
    return f"{CLS} {context} {SEP} {query} {SEP}"


# ------------------------------------------------------------------ parse


@dataclass(frozen=True)
class ParsedText:
    example: Example
    stated_label: bool | None = None
    stated_depth: int | None = None


_SENTENCE = re.compile(r"\S.*?(?:[.?](?=\s|$)|$)", re.S)
_HEADER = re.compile(r"^(Rules|Facts):\s*")
_META = re.compile(r"^(Label|Proof Depth|From):\s*(\S+)\s*$")
_QUERY = {
    Profile.APPENDIXD: re.compile(r"^Query:\s*Alice is (\S+)\s*\?$"),
    Profile.SECTION21: re.compile(r"^Query:\s*Alice is (\S+)\.$"),
}
_FACT = {
    Profile.APPENDIXD: re.compile(r"^Alice (\S+)\.$"),
    Profile.SECTION21: re.compile(r"^Alice is (\S+)\.$"),
}
_RULE = {
    Profile.APPENDIXD: re.compile(r"^If (.+), then (\S+)\.$"),
    Profile.SECTION21: re.compile(r"^(.+), (\S+)\.$"),
}


def _sentences(text: str) -> Iterator[tuple[int, str]]:
    """(line number, sentence) pairs; a meta line is one sentence."""
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if _META.match(line):
            yield lineno, line
            continue
        header = _HEADER.match(line)
        if header:
            line = line[header.end():]
        for m in _SENTENCE.finditer(line):
            yield lineno, " ".join(m.group(0).split())


def parse_text(
    text: str,
    profile: Profile | str = Profile.APPENDIXD,
    vocabulary: Vocabulary | None = None,
    *,
    sampler: SamplerTag | str = SamplerTag.UNIFORM,
    depth_cap: int = DEFAULT_CAP,
) -> ParsedText:
    """Parse one example, also returning any label or depth the text states."""
    profile = Profile(profile)
    vocab = vocabulary or Vocabulary.default()
    tag = SamplerTag(sampler)
    facts: list[int] = []
    rules: list[Rule] = []
    query = None
    stated_label = stated_depth = None

    def word(w: str, lineno: int, k: int) -> int:
        if w not in vocab:
            raise ParseError(f"out-of-vocabulary word {w!r}", lineno, k)
        return vocab.index(w)

    for k, (lineno, s) in enumerate(_sentences(text), 1):
        meta = _META.match(s)
        if meta:
            key, value = meta.groups()
            try:
                if key == "Label":
                    if value not in ("True", "False"):
                        raise ValueError(value)
                    stated_label = value == "True"
                elif key == "Proof Depth":
                    stated_depth = int(value)
                else:
                    tag = SamplerTag(value)
            except ValueError:
                raise ParseError(f"bad {key} value {value!r}", lineno, k) from None
            continue
        if query is not None:
            raise ParseError(f"unexpected sentence after the query: {s!r}", lineno, k)
        m = _QUERY[profile].match(s)
        if m:
            query = word(m.group(1), lineno, k)
            continue
        m = _FACT[profile].match(s)
        if m:
            facts.append(word(m.group(1), lineno, k))
            continue
        m = _RULE[profile].match(s)
        if m:
            body = tuple(word(w, lineno, k) for w in m.group(1).split(" and "))
            rules.append(Rule(body, word(m.group(2), lineno, k)))
            continue
        raise ParseError(f"sentence does not match the {profile.value} templates: {s!r}", lineno, k)

    if query is None:
        raise ParseError("no query sentence")
    theory = Theory.build(facts, rules, (query,))
    label, depth = label_and_depth(theory, query, depth_cap)
    return ParsedText(Example(theory, query, label, depth, tag), stated_label, stated_depth)


def parse_example(
    text: str,
    profile: Profile | str = Profile.APPENDIXD,
    vocabulary: Vocabulary | None = None,
    *,
    sampler: SamplerTag | str = SamplerTag.UNIFORM,
    depth_cap: int = DEFAULT_CAP,
) -> Example:
    return parse_text(text, profile, vocabulary, sampler=sampler, depth_cap=depth_cap).example


def parse_model_input(
    text: str,
    profile: Profile | str = Profile.SECTION21,
    vocabulary: Vocabulary | None = None,
    *,
    sampler: SamplerTag | str = SamplerTag.UNIFORM,
) -> Example:
    text = text.strip()
    if not text.startswith(CLS) or text.count(SEP) != 2 or not text.endswith(SEP):
        raise ParseError(f"model input must look like '{CLS} context {SEP} query {SEP}'")
    context, query, _ = text[len(CLS):].split(SEP)
    return parse_example(context + "\n" + query, profile, vocabulary, sampler=sampler)


def split_corpus(text: str) -> Iterator[tuple[int, str]]:
    """Split a corpus into example blocks, yielding (first line, block text).

    Blocks are separated by blank lines. A paragraph holding only
    ``Label:``/``Proof Depth:``/``From:`` lines, or any paragraph before the
    block's query, joins the current block instead of starting a new one.
    Blank lines inside a block are kept so line numbers stay aligned.
    """
    paragraphs: list[tuple[int, list[str]]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if paragraphs and paragraphs[-1][0] + len(paragraphs[-1][1]) == lineno:
            paragraphs[-1][1].append(line)
        else:
            paragraphs.append((lineno, [line]))

    block: list[tuple[int, list[str]]] = []
    has_query = False
    for para in paragraphs:
        meta_only = all(_META.match(l.strip()) for l in para[1])
        if block and has_query and not meta_only:
            yield _join(block)
            block, has_query = [], False
        block.append(para)
        has_query = has_query or any("Query:" in l for l in para[1])
    if block:
        yield _join(block)


def _join(block: list[tuple[int, list[str]]]) -> tuple[int, str]:
    first = block[0][0]
    lines: list[str] = []
    for start, para in block:
        lines.extend([""] * (start - first - len(lines)))
        lines.extend(para)
    return first, "\n".join(lines)


def parse_corpus(
    text: str,
    profile: Profile | str = Profile.APPENDIXD,
    vocabulary: Vocabulary | None = None,
    *,
    sampler: SamplerTag | str = SamplerTag.UNIFORM,
) -> list[ParsedText]:
    out = []
    for start, block in split_corpus(text):
        try:
            out.append(parse_text(block, profile, vocabulary, sampler=sampler))
        except ParseError as exc:
            line = None if exc.line is None else exc.line + start - 1
            raise ParseError(exc.detail, line, exc.sentence) from None
    return out

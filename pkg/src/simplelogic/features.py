"""Statistical features of examples and label-conditional histograms.

Integer features use unit bins. ``branching_factor`` uses bins of width
``w`` centred on multiples of ``w`` (bin ``i`` covers ``[(i - 1/2) w,
(i + 1/2) w)``), so with the default width 0.1 the interval [2.65, 2.75)
is bin 27. Bin arithmetic is exact (``Fraction``) so ratios such as 2.75
land in the bin above rather than wobbling with float rounding.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple, Sequence

from .core import Example

FEATURES = ("pred_count", "fact_count", "rule_count", "branching_factor")
LOW_SUPPORT = 100


class Profile(NamedTuple):
    """The counts every feature is computed from, plus the label.

    Large statistical runs keep these instead of whole examples.
    """

    pred_count: int
    fact_count: int
    rule_count: int
    body_total: int
    label: bool

    @classmethod
    def of_draw(cls, d) -> "Profile":
        """From a raw sampler draw (anything with preds, facts, rules, label)."""
        return cls(len(d.preds), len(d.facts), len(d.rules), sum(len(b) for b, _ in d.rules), d.label)

    @classmethod
    def of(cls, example: Example) -> "Profile":
        th = example.theory
        return cls(
            len(th.predicates),
            len(th.facts),
            len(th.rules),
            sum(len(r.body) for r in th.rules),
            example.label,
        )


Row = Example | Profile


def _profile(x: Row) -> Profile:
    return x if isinstance(x, Profile) else Profile.of(x)


def rule_count(example: Row) -> int:
    if isinstance(example, Profile):
        return example.rule_count
    return len(example.theory.rules)


def fact_count(example: Row) -> int:
    if isinstance(example, Profile):
        return example.fact_count
    return len(example.theory.facts)


def pred_count(example: Row) -> int:
    if isinstance(example, Profile):
        return example.pred_count
    return len(example.theory.predicates)


def _bf_parts(example: Row) -> tuple[int, int]:
    p = _profile(example)
    num = p.fact_count + p.body_total + p.rule_count
    den = p.fact_count + p.rule_count
    if den == 0:
        raise ValueError("branching_factor needs at least one fact or rule")
    return num, den


def branching_factor(example: Row) -> float:
    """Mean clause length: facts count 1, a rule counts its body plus its head.

    Ranges over [1, 4].
    """
    num, den = _bf_parts(example)
    return num / den


_EXTRACTORS: dict[str, Callable[[Row], int | float]] = {
    "pred_count": pred_count,
    "fact_count": fact_count,
    "rule_count": rule_count,
    "branching_factor": branching_factor,
}


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    bin_width: float = 0.1

    def __post_init__(self):
        if self.name not in _EXTRACTORS:
            raise ValueError(f"unknown feature {self.name!r}; choose from {', '.join(FEATURES)}")
        if not self.bin_width > 0:
            raise ValueError("bin width must be positive")

    @property
    def integer(self) -> bool:
        return self.name != "branching_factor"

    def value(self, example: Row) -> int | float:
        return _EXTRACTORS[self.name](example)

    def bin_of(self, example: Row) -> int:
        if self.integer:
            return _EXTRACTORS[self.name](example)
        num, den = _bf_parts(example)
        w = Fraction(self.bin_width).limit_denominator(10**6)
        return math.floor(Fraction(num, den) / w + Fraction(1, 2))

    def bin_of_value(self, x: float) -> int:
        if self.integer:
            return int(x)
        w = Fraction(self.bin_width).limit_denominator(10**6)
        return math.floor(Fraction(x).limit_denominator(10**9) / w + Fraction(1, 2))

    def bin_bounds(self, b: int) -> tuple[float, float]:
        """Half-open interval ``[lo, hi)`` covered by bin ``b``."""
        if self.integer:
            return float(b), float(b + 1)
        return round((b - 0.5) * self.bin_width, 10), round((b + 0.5) * self.bin_width, 10)


    def bin_range(self, lo: float, hi: float) -> tuple[int, int]:
        """Inclusive bin indices covering the value range ``[lo, hi]``.

        For ``branching_factor`` this selects every bin starting inside the
        range, so ``(2.65, 2.75)`` is the single bin [2.65, 2.75).
        """
        if self.integer:
            return math.ceil(lo), math.floor(hi)
        blo, bhi = self.bin_of_value(lo), self.bin_of_value(hi)
        if self.bin_bounds(bhi)[0] >= hi - 1e-12 and bhi > blo:
            bhi -= 1
        return blo, bhi


@dataclass(frozen=True)
class JointFeature:
    """Several features binned together; a bin is a tuple of component bins."""

    parts: tuple[FeatureSpec, ...]

    def __post_init__(self):
        parts = tuple(FeatureSpec(p) if isinstance(p, str) else p for p in self.parts)
        if not parts:
            raise ValueError("a joint feature needs at least one component")
        object.__setattr__(self, "parts", parts)

    @property
    def name(self) -> str:
        return ",".join(p.name for p in self.parts)

    integer = False

    def bin_of(self, example: Row) -> tuple:
        return tuple(p.bin_of(example) for p in self.parts)

    def bin_bounds(self, b: tuple) -> tuple:
        return tuple(p.bin_bounds(x) for p, x in zip(self.parts, b))


def feature(name: str, bin_width: float = 0.1) -> FeatureSpec | JointFeature:
    """Parse ``"rule_count"`` or a comma-joined list such as ``"fact_count,rule_count"``."""
    names = [n.strip() for n in name.split(",") if n.strip()]
    if len(names) == 1:
        return FeatureSpec(names[0], bin_width)
    return JointFeature(tuple(FeatureSpec(n, bin_width) for n in names))


@dataclass
class ConditionalHistogram:
    """Per-bin positive/negative counts for one feature; merge with ``+``."""

    feature: FeatureSpec | JointFeature
    counts: dict = field(default_factory=dict)

    def add(self, example: Row) -> None:
        cell = self.counts.setdefault(self.feature.bin_of(example), [0, 0])
        cell[0 if example.label else 1] += 1

    def __add__(self, other: "ConditionalHistogram") -> "ConditionalHistogram":
        if other.feature != self.feature:
            raise ValueError("cannot merge histograms over different features")
        out = ConditionalHistogram(self.feature, {b: list(c) for b, c in self.counts.items()})
        for b, (p, n) in other.counts.items():
            cell = out.counts.setdefault(b, [0, 0])
            cell[0] += p
            cell[1] += n
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConditionalHistogram):
            return NotImplemented
        return self.feature == other.feature and self.counts == other.counts

    @property
    def total(self) -> int:
        return sum(p + n for p, n in self.counts.values())

    def bins(self) -> list:
        return sorted(self.counts)

    def positives(self, b: int) -> int:
        return self.counts.get(b, (0, 0))[0]

    def negatives(self, b: int) -> int:
        return self.counts.get(b, (0, 0))[1]

    def support(self, b: int) -> int:
        p, n = self.counts.get(b, (0, 0))
        return p + n

    def conditional(self, b: int) -> float | None:
        """Pr(label = 1 | bin); ``None`` for an empty bin."""
        s = self.support(b)
        return self.positives(b) / s if s else None

    def marginal(self, b: int) -> float:
        t = self.total
        return self.support(b) / t if t else 0.0

    def rows(self) -> list[dict]:
        out = []
        for b in self.bins():
            lo, hi = self.feature.bin_bounds(b) if not isinstance(b, tuple) else _joint_bounds(self.feature, b)
            out.append(
                {
                    "feature": self.feature.name,
                    "bin_low": lo,
                    "bin_high": hi,
                    "positives": self.positives(b),
                    "negatives": self.negatives(b),
                    "conditional_prob": self.conditional(b),
                    "marginal_prob": self.marginal(b),
                }
            )
        return out


def _joint_bounds(spec: JointFeature, b: tuple) -> tuple[str, str]:
    bounds = spec.bin_bounds(b)
    return ";".join(_fmt(lo) for lo, _ in bounds), ";".join(_fmt(hi) for _, hi in bounds)


def _fmt(x: float) -> str:
    return f"{round(x, 10):g}"


def conditional_label_histogram(
    examples: Iterable[Row], spec: FeatureSpec | JointFeature | str
) -> ConditionalHistogram:
    if isinstance(spec, str):
        spec = feature(spec)
    hist = ConditionalHistogram(spec)
    for ex in examples:
        hist.add(ex)
    return hist


# ------------------------------------------------------------------ joint


Cell = int | tuple[float, float]


@dataclass(frozen=True)
class JointResult:
    positives: int
    support: int
    min_support: int = LOW_SUPPORT

    @property
    def probability(self) -> float | None:
        """``None`` when the cell is empty (distinct from probability 0)."""
        return self.positives / self.support if self.support else None

    @property
    def low_confidence(self) -> bool:
        return self.support < self.min_support


def _matcher(spec: FeatureSpec, cell: Cell) -> Callable[[Row], bool]:
    if isinstance(cell, tuple):
        blo, bhi = spec.bin_range(*cell)
        return lambda ex: blo <= spec.bin_of(ex) <= bhi
    if spec.integer:
        return lambda ex: spec.value(ex) == cell
    target = spec.bin_of_value(cell)
    return lambda ex: spec.bin_of(ex) == target


def joint_conditional(
    examples: Iterable[Row],
    specs: Sequence[FeatureSpec | str],
    cell: Sequence[Cell],
    min_support: int = LOW_SUPPORT,
) -> JointResult:
    """Pr(label = 1) among examples falling in ``cell``, with its support.

    ``cell`` gives one entry per feature: an exact value (integer features),
    a value whose bin is wanted (``branching_factor``), or an inclusive
    ``(lo, hi)`` range. For ``branching_factor`` a range selects whole bins,
    so ``(2.65, 2.75)`` is exactly the bin [2.65, 2.75).
    """
    specs = [FeatureSpec(s) if isinstance(s, str) else s for s in specs]
    if len(specs) != len(cell):
        raise ValueError("need exactly one cell entry per feature")
    tests = [_matcher(s, c) for s, c in zip(specs, cell)]
    pos = sup = 0
    for ex in examples:
        if all(t(ex) for t in tests):
            sup += 1
            pos += ex.label
    return JointResult(pos, sup, min_support)


def quartile_bins(values: Sequence[float]) -> list[float]:
    """Cut points splitting ``values`` into four population quartiles."""
    ordered = sorted(values)
    if not ordered:
        raise ValueError("no values")
    n = len(ordered)
    return [ordered[(n * q) // 4] for q in (1, 2, 3)]


def quartile_rates(examples: Sequence[Row], spec: FeatureSpec | str) -> list[tuple[float, int]]:
    """Positive rate and size of each population quartile of a feature.

    Ties at a cut point go to the upper quartile.
    """
    if isinstance(spec, str):
        spec = FeatureSpec(spec)
    vals = [spec.value(e) for e in examples]
    cuts = quartile_bins(vals)
    pos = Counter()
    tot = Counter()
    for v, e in zip(vals, examples):
        q = sum(v >= c for c in cuts)
        tot[q] += 1
        pos[q] += e.label
    return [(pos[q] / tot[q] if tot[q] else float("nan"), tot[q]) for q in range(4)]

"""Removing a statistical feature by label-balanced down-sampling.

Given a reference histogram over a feature, a plan fixes how many examples
of each label every bin keeps. Inside the balanced range the two labels get
equal quotas; outside it a bin keeps its natural label mix. Bin totals follow
the reference marginal, so the output has the same feature distribution and
the requested size.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

from .core import Dataset, Example
from .features import ConditionalHistogram, FeatureSpec, JointFeature, Row, feature


class InfeasiblePlan(ValueError):
    """The pool or the sampling budget cannot support the requested plan."""


Range = tuple[float, float] | Sequence[tuple[float, float]]


def _in_range_test(spec: FeatureSpec | JointFeature, balanced_range: Range):
    if isinstance(spec, JointFeature):
        if len(balanced_range) != len(spec.parts):
            raise ValueError("a joint feature needs one (lo, hi) range per component")
        bounds = [p.bin_range(lo, hi) for p, (lo, hi) in zip(spec.parts, balanced_range)]
        return lambda b: all(lo <= x <= hi for x, (lo, hi) in zip(b, bounds))
    lo, hi = spec.bin_range(*balanced_range)
    return lambda b: lo <= b <= hi


def estimate_oversample_ratio(hist: ConditionalHistogram, balanced_range: Range) -> float:
    """Pre-sampling multiple ``k`` needed to balance every in-range bin.

    A bin with positive rate ``p`` keeps ``2 min(p, 1 - p)`` of its examples
    once balanced, so holding its marginal share at the original size needs
    ``0.5 / min(p, 1 - p)`` times the data. The most skewed bin decides.
    """
    inside = _in_range_test(hist.feature, balanced_range)
    k = None
    for b in hist.bins():
        if not inside(b):
            continue
        p = hist.conditional(b)
        minority = min(p, 1 - p)
        if minority == 0:
            label = "negative" if p == 1 else "positive"
            raise InfeasiblePlan(f"bin {b} has no {label} examples; it cannot be balanced")
        k = max(k or 0.0, 0.5 / minority)
    if k is None:
        raise ValueError("no populated bins inside the balanced range")
    return k


@dataclass(frozen=True)
class BalancePlan:
    feature: FeatureSpec | JointFeature
    balanced_range: Range
    target_size: int
    reference_marginal: dict
    quotas: dict  # bin -> (positives, negatives) inside the range, (total, None) outside

    def in_range(self, b) -> bool:
        return _in_range_test(self.feature, self.balanced_range)(b)

    def bin_total(self, b) -> int:
        pos, neg = self.quotas.get(b, (0, 0))
        return pos + (neg or 0)


def make_plan(reference: ConditionalHistogram, balanced_range: Range, target_size: int) -> BalancePlan:
    """Quotas preserving the reference marginal at ``target_size`` examples.

    Apportionment is largest-remainder. In-range bins are apportioned in
    pairs so each gets equal label quotas; a single leftover example (odd
    target with every bin in range) goes to the largest in-range bin.
    """
    if target_size < 0:
        raise ValueError("target_size must be non-negative")
    if reference.total == 0:
        raise ValueError("reference histogram is empty")
    inside = _in_range_test(reference.feature, balanced_range)
    marginal = {b: reference.marginal(b) for b in reference.bins()}

    # (bin, unit size, exact share in units)
    shares = [(b, 2 if inside(b) else 1, target_size * m / (2 if inside(b) else 1)) for b, m in marginal.items()]
    units = {b: math.floor(x) for b, _, x in shares}
    left = target_size - sum(units[b] * size for b, size, _ in shares)
    order = sorted(shares, key=lambda t: (-(t[2] - math.floor(t[2])), -marginal[t[0]], str(t[0])))
    for b, size, _ in order:
        if left >= size:
            units[b] += 1
            left -= size
    odd_bin = None
    if left:
        odd_bin = max((b for b, size, _ in shares if size == 2), key=lambda b: (marginal[b], str(b)))

    quotas = {}
    for b, size, _ in shares:
        if size == 2:
            quotas[b] = (units[b] + (b == odd_bin), units[b])
        elif units[b]:
            quotas[b] = (units[b], None)
    return BalancePlan(reference.feature, balanced_range, target_size, marginal, quotas)


def check_budget(k: float, budget: float) -> None:
    if k > budget:
        raise InfeasiblePlan(f"oversample ratio k = {k:.1f} exceeds the budget of {budget:g}")


def balance_downsample(pool: Sequence[Example] | Dataset, plan: BalancePlan, rng: random.Random) -> Dataset:
    """Pick a subset of ``pool`` meeting ``plan``; output keeps pool order."""
    examples = list(pool)
    spec = plan.feature
    groups: dict = {}
    for i, ex in enumerate(examples):
        b = spec.bin_of(ex)
        if b not in plan.quotas:
            continue
        pos, neg = plan.quotas[b]
        key = (b, ex.label) if neg is not None else (b, None)
        groups.setdefault(key, []).append(i)

    chosen: list[int] = []
    deficits = []
    for b in sorted(plan.quotas, key=str):
        pos, neg = plan.quotas[b]
        wants = [((b, True), pos), ((b, False), neg)] if neg is not None else [((b, None), pos)]
        for key, n in wants:
            have = groups.get(key, [])
            if len(have) < n:
                deficits.append((key, n, len(have)))
                continue
            chosen.extend(rng.sample(have, n))
    if deficits:
        parts = []
        for (b, label), n, have in deficits:
            what = "any label" if label is None else ("label=1" if label else "label=0")
            parts.append(f"bin {b} {what}: need {n}, pool has {have}")
        raise InfeasiblePlan("pool cannot meet the plan; " + "; ".join(parts))
    chosen.sort()
    return Dataset([examples[i] for i in chosen], {"balanced": spec.name, "target_size": plan.target_size})


def criteria_report(output: Sequence[Row], plan: BalancePlan, tolerance: float = 0.02) -> dict:
    """Check label balance, marginal preservation and size on ``output``."""
    hist = ConditionalHistogram(plan.feature)
    for ex in output:
        hist.add(ex)
    per_bin = {}
    worst = 0.0
    for b in hist.bins():
        if not plan.in_range(b):
            continue
        p = hist.conditional(b)
        per_bin[str(b)] = {"support": hist.support(b), "positive_rate": p}
        worst = max(worst, abs(p - 0.5))
    bins = set(hist.bins()) | set(plan.reference_marginal)
    tv = 0.5 * sum(abs(hist.marginal(b) - plan.reference_marginal.get(b, 0.0)) for b in bins)
    size = hist.total
    return {
        "feature": plan.feature.name,
        "per_bin": per_bin,
        "max_balance_deviation": worst,
        "balance_ok": worst <= tolerance,
        "tv_distance": tv,
        "marginal_ok": tv <= tolerance,
        "size": size,
        "target_size": plan.target_size,
        "size_ok": size == plan.target_size,
        "ok": worst <= tolerance and tv <= tolerance and size == plan.target_size,
    }


def naive_minimal_drop(pool: Sequence[Example], spec: FeatureSpec | str, balanced_range: Range) -> list[Example]:
    """Balance each in-range bin by dropping only majority-label examples.

    This keeps as much data as possible but wrecks the feature's marginal;
    it exists to show why :func:`balance_downsample` preserves marginals.
    """
    if isinstance(spec, str):
        spec = feature(spec)
    inside = _in_range_test(spec, balanced_range)
    counts: dict = {}
    for ex in pool:
        b = spec.bin_of(ex)
        c = counts.setdefault(b, [0, 0])
        c[0 if ex.label else 1] += 1
    keep_left = {b: [min(c), min(c)] for b, c in counts.items()}
    out = []
    for ex in pool:
        b = spec.bin_of(ex)
        if not inside(b):
            out.append(ex)
            continue
        slot = 0 if ex.label else 1
        if keep_left[b][slot]:
            keep_left[b][slot] -= 1
            out.append(ex)
    return out

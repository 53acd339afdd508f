import random

import pytest

from simplelogic.balance import (
    InfeasiblePlan,
    balance_downsample,
    check_budget,
    criteria_report,
    estimate_oversample_ratio,
    make_plan,
    naive_minimal_drop,
)
from simplelogic.features import FeatureSpec, Profile, conditional_label_histogram

RULES = FeatureSpec("rule_count")


def synthetic(n, seed, rate=lambda r: min(0.95, 0.2 + r / 100)):
    """Profiles with rule counts 0..79 and a positive rate rising with them."""
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        r = min(int(rng.expovariate(1 / 25)), 79)
        out.append(Profile(10, 2, r, r, rng.random() < rate(r)))
    return out


def test_prebalanced_ratio_is_one():
    rows = [Profile(10, 1, r, r, lab) for r in range(10) for lab in (True, False)]
    assert estimate_oversample_ratio(conditional_label_histogram(rows, RULES), (0, 9)) == 1.0


def test_ratio_follows_most_skewed_bin():
    rows = [Profile(10, 1, 3, 3, i < 9) for i in range(10)] + [Profile(10, 1, 4, 4, i < 6) for i in range(10)]
    k = estimate_oversample_ratio(conditional_label_histogram(rows, RULES), (0, 9))
    assert k == pytest.approx(0.5 / 0.1)
    # bins outside the range do not count
    k = estimate_oversample_ratio(conditional_label_histogram(rows, RULES), (4, 9))
    assert k == pytest.approx(0.5 / 0.4)


def test_ratio_with_single_label_bin_is_infeasible():
    rows = [Profile(10, 1, 3, 3, True)] * 3
    with pytest.raises(InfeasiblePlan, match="bin 3"):
        estimate_oversample_ratio(conditional_label_histogram(rows, RULES), (0, 9))


def test_budget():
    check_budget(5.0, 10)
    with pytest.raises(InfeasiblePlan, match="budget"):
        check_budget(12.0, 10)


@pytest.mark.parametrize("target", [1000, 1001, 2])
def test_plan_quotas(target):
    ref = conditional_label_histogram(synthetic(5000, 1), RULES)
    plan = make_plan(ref, (0, 80), target)
    assert sum(plan.bin_total(b) for b in plan.quotas) == target
    odd = [b for b, (p, n) in plan.quotas.items() if p != n]
    assert len(odd) == target % 2


def test_plan_keeps_outside_bins_whole():
    ref = conditional_label_histogram(synthetic(5000, 1), RULES)
    plan = make_plan(ref, (0, 40), 1000)
    assert all(n is None for b, (p, n) in plan.quotas.items() if b > 40)
    assert all(n is not None for b, (p, n) in plan.quotas.items() if b <= 40)


def test_balanced_output_meets_all_three_criteria():
    rate = lambda r: min(0.9, 0.2 + r / 100)  # k = 5, pool is 10x
    reference = synthetic(20_000, 2, rate)
    pool = synthetic(200_000, 3, rate)
    plan = make_plan(conditional_label_histogram(reference, RULES), (0, 80), 20_000)
    out = balance_downsample(pool, plan, random.Random(0))
    report = criteria_report(list(out), plan)
    assert report["ok"], report
    assert report["size"] == 20_000
    for b in report["per_bin"].values():
        assert abs(b["positive_rate"] - 0.5) <= 0.02


def test_skewed_bin_becomes_even():
    # 927 of 1000 examples at rule_count 80 are positive
    pool = [Profile(10, 1, 80, 80, i < 927) for i in range(1000)]
    pool += [Profile(10, 1, 38, 38, i % 2 == 0) for i in range(1000)]
    plan = make_plan(conditional_label_histogram(pool, RULES), (0, 80), 140)
    out = balance_downsample(pool, plan, random.Random(1))
    h = conditional_label_histogram(out, RULES)
    assert h.conditional(80) == 0.5 and h.conditional(38) == 0.5
    assert h.support(80) == h.support(38) == 70


def test_output_keeps_pool_order():
    pool = synthetic(3000, 4)
    plan = make_plan(conditional_label_histogram(pool, RULES), (0, 80), 300)
    out = list(balance_downsample(pool, plan, random.Random(2)))
    idx = {id(x): i for i, x in enumerate(pool)}
    positions = [idx[id(x)] for x in out]
    assert positions == sorted(positions)


def test_already_even_pool_is_kept():
    pool = [Profile(10, 1, r, r, lab) for r in range(20) for lab in (True, False) for _ in range(5)]
    plan = make_plan(conditional_label_histogram(pool, RULES), (0, 80), len(pool))
    out = balance_downsample(pool, plan, random.Random(0))
    assert sorted(out) == sorted(pool)


def test_deficit_names_bins():
    reference = synthetic(5000, 5)
    pool = synthetic(2000, 6)
    plan = make_plan(conditional_label_histogram(reference, RULES), (0, 80), 5000)
    with pytest.raises(InfeasiblePlan) as info:
        balance_downsample(pool, plan, random.Random(0))
    assert "label=0" in str(info.value) and "need" in str(info.value)


def test_naive_drop_distorts_the_marginal():
    pool = synthetic(50_000, 7)
    naive = naive_minimal_drop(pool, RULES, (0, 80))
    plan = make_plan(conditional_label_histogram(pool, RULES), (0, 80), len(naive))
    report = criteria_report(naive, plan)
    assert report["balance_ok"] and not report["marginal_ok"]

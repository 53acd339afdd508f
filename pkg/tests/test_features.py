import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simplelogic.core import Example, Theory
from simplelogic.features import (
    ConditionalHistogram,
    FeatureSpec,
    JointFeature,
    Profile,
    branching_factor,
    conditional_label_histogram,
    fact_count,
    feature,
    joint_conditional,
    pred_count,
    quartile_rates,
    rule_count,
)


def ex(facts, rules, query=0, label=True):
    return Example(Theory.build(facts, rules, (query,)), query, label, 0)


def test_counts():
    e = ex([0], [((0,), 1), ((1,), 2)])
    assert (rule_count(e), fact_count(e), pred_count(e)) == (2, 1, 3)
    assert rule_count(ex([0], [])) == 0


def test_reference_fact_count(reference_blocks):
    assert fact_count(reference_blocks[0].example) == 3


def test_branching_factor_counts_heads():
    # facts weigh 1, a rule weighs body + head
    assert branching_factor(ex([0, 1], [((2,), 3), ((2, 3, 4), 5)])) == (2 + 2 + 4) / 4
    assert branching_factor(ex([], [((0, 1, 2), 3)])) == 4.0
    e = ex([0, 1, 2], [((0,), 4), ((1,), 5)])
    assert branching_factor(e) == (3 + 2 * 2) / 5


def test_branching_factor_range():
    assert branching_factor(ex([0], [])) == 1.0
    with pytest.raises(ValueError):
        branching_factor(ex([], []))


def test_profile_matches_example():
    e = ex([0, 1], [((0, 1), 2), ((2,), 3)], label=False)
    p = Profile.of(e)
    assert p == Profile(4, 2, 2, 3, False)
    assert branching_factor(p) == branching_factor(e)


@pytest.mark.parametrize(
    "value, expected", [(2.7, 27), (2.65, 27), (2.749, 27), (2.75, 28), (2.64, 26), (1.0, 10)]
)
def test_branching_factor_bins(value, expected):
    assert FeatureSpec("branching_factor").bin_of_value(value) == expected


def test_bf_bin_of_exact_fraction():
    # (15 + 42 + 18) / (15 + 18) = 75 / 33 = 2.2727... ; and 53/20 = 2.65 exactly
    spec = FeatureSpec("branching_factor")
    p = Profile(20, 5, 15, 38, True)  # (5 + 38 + 15) / 20 = 2.9
    assert spec.bin_of(p) == 29
    p = Profile(20, 7, 13, 33, True)  # (7 + 33 + 13) / 20 = 2.65
    assert spec.bin_of(p) == 27


def test_bin_range():
    bf = FeatureSpec("branching_factor")
    assert bf.bin_range(2.65, 2.75) == (27, 27)
    assert bf.bin_bounds(27) == (2.65, 2.75)
    assert FeatureSpec("rule_count").bin_range(0, 80) == (0, 80)


def test_unknown_feature():
    with pytest.raises(ValueError, match="unknown feature"):
        FeatureSpec("depth")


def test_degenerate_histogram():
    h = conditional_label_histogram([ex([0], [((0,), i)]) for i in (1, 2, 3, 4, 5)][:1] * 2, "rule_count")
    assert h.bins() == [1]
    h = ConditionalHistogram(FeatureSpec("rule_count"))
    for _ in range(2):
        h.add(Profile(6, 1, 5, 5, True))
    assert h.conditional(5) == 1.0 and h.marginal(5) == 1.0
    assert h.conditional(6) is None


def test_rows_have_csv_columns():
    h = conditional_label_histogram([Profile(6, 1, 5, 5, True), Profile(6, 1, 5, 5, False)], "rule_count")
    (row,) = h.rows()
    assert row == {
        "feature": "rule_count",
        "bin_low": 5.0,
        "bin_high": 6.0,
        "positives": 1,
        "negatives": 1,
        "conditional_prob": 0.5,
        "marginal_prob": 1.0,
    }


def test_joint_histogram_bins_are_tuples():
    spec = feature("fact_count,rule_count")
    assert isinstance(spec, JointFeature)
    h = conditional_label_histogram([Profile(6, 1, 5, 5, True)], spec)
    assert h.bins() == [(1, 5)]
    assert h.rows()[0]["bin_low"] == "1;5"


profiles = st.builds(
    Profile,
    st.integers(5, 30),
    st.integers(1, 30),
    st.integers(0, 120),
    st.integers(0, 360),
    st.booleans(),
)


@settings(max_examples=100, deadline=None)
@given(st.lists(profiles, max_size=60), st.integers(0, 60), st.randoms())
def test_histogram_merge_and_order_invariance(rows, cut, rnd):
    spec = FeatureSpec("branching_factor")
    full = conditional_label_histogram(rows, spec)
    merged = conditional_label_histogram(rows[:cut], spec) + conditional_label_histogram(rows[cut:], spec)
    assert merged == full
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    assert conditional_label_histogram(shuffled, spec) == full
    if rows:
        assert math.isclose(sum(full.marginal(b) for b in full.bins()), 1.0)


def test_merge_rejects_other_feature():
    with pytest.raises(ValueError):
        ConditionalHistogram(FeatureSpec("rule_count")) + ConditionalHistogram(FeatureSpec("fact_count"))


def test_joint_conditional_cells():
    rows = [
        Profile(20, 7, 13, 33, True),  # bf 2.65
        Profile(20, 7, 13, 33, False),
        Profile(20, 7, 13, 20, True),  # bf 2.0
        Profile(20, 8, 13, 33, True),
    ]
    r = joint_conditional(rows, ["fact_count", "branching_factor"], [7, (2.65, 2.75)])
    assert (r.positives, r.support, r.probability) == (1, 2, 0.5)
    assert r.low_confidence
    r = joint_conditional(rows, ["fact_count", "rule_count"], [7, (10, 13)])
    assert r.support == 3
    r = joint_conditional(rows, ["fact_count"], [99])
    assert r.support == 0 and r.probability is None


def test_quartile_rates():
    rng = random.Random(0)
    rows = [Profile(10, 1, r, r, rng.random() < r / 100) for r in range(1, 101)]
    rates = quartile_rates(rows, "rule_count")
    assert [n for _, n in rates] == [25, 25, 25, 25]
    ties = quartile_rates([Profile(10, 1, 5, 5, True)] * 4, "rule_count")
    assert ties[3] == (1.0, 4)

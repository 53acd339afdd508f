import random
from collections import Counter

import pytest

from simplelogic.core import SamplerTag, validate_example
from simplelogic.solver import forward_chain, label_and_depth
from simplelogic.sampler import (
    AcceptanceFloorError,
    SamplerConfig,
    StratifiedSpec,
    draw,
    generate_stratified,
    iter_draws,
    sample_lp,
    sample_lp_star,
    sample_rp,
    sample_uniform_conditioned,
    stream,
)


@pytest.mark.parametrize("tag", list(SamplerTag))
def test_outputs_validate(tag):
    for ex in draw(tag, 150, seed=3):
        report = validate_example(ex)
        assert report.ok, report.violations
        assert ex.sampler is tag


def test_permissive_flag_allows_zero_facts():
    cfg = SamplerConfig(permissive_facts=True)
    exs = draw(SamplerTag.RP, 3000, seed=1, config=cfg)
    assert any(not e.theory.facts for e in exs)
    assert all(validate_example(e, permissive_facts=True).ok for e in exs[:300])


def test_same_seed_same_sequence():
    a = draw(SamplerTag.RP, 200, seed=42)
    b = draw(SamplerTag.RP, 200, seed=42)
    assert a == b
    assert a != draw(SamplerTag.RP, 200, seed=43)


def test_streams_are_independent_of_each_other():
    assert stream(5, 0).random() != stream(5, 1).random()
    assert stream(5, 1).random() == stream(5, 1).random()


def test_lp_labels_are_solver_consistent():
    rng = random.Random(0)
    for _ in range(300):
        ex = sample_lp(rng)
        assert (ex.label, ex.depth) == label_and_depth(ex.theory, ex.query)
        proved = forward_chain(ex.theory)
        for r in ex.theory.rules:
            if all(b in proved for b in r.body):
                assert r.head in proved


def test_lp_star_with_one_rule_per_predicate_is_lp():
    for seed in range(50):
        a = sample_lp(random.Random(seed))
        b = sample_lp_star(random.Random(seed), multiplicity=1)
        assert (a.theory, a.query, a.label, a.depth) == (b.theory, b.query, b.label, b.depth)


def _support_per_true_head(exs):
    counts = []
    for e in exs:
        proved = forward_chain(e.theory)
        heads = Counter(r.head for r in e.theory.rules if r.head in proved and r.head not in e.theory.facts)
        counts.extend(heads.values())
    return sum(counts) / len(counts)


def test_lp_star_adds_alternative_proofs():
    rng1, rng3 = random.Random(1), random.Random(1)
    one = [sample_lp_star(rng1, multiplicity=1) for _ in range(300)]
    three = [sample_lp_star(rng3, multiplicity=3) for _ in range(300)]
    assert _support_per_true_head(three) > _support_per_true_head(one)


def test_lp_positive_rate_grows_with_rule_count():
    # measured on a depth-stratified LP set, the form the datasets take
    spec = StratifiedSpec(per_depth=400, sampler=SamplerTag.LP)
    ds = generate_stratified(spec, SamplerConfig(seed=5))
    mid = [e.label for e in ds if 15 <= len(e.theory.rules) < 45]
    high = [e.label for e in ds if len(e.theory.rules) >= 75]
    assert len(high) >= 50
    assert sum(high) / len(high) > sum(mid) / len(mid) + 0.1


def test_uniform_conditioning():
    rng = random.Random(4)
    for _ in range(20):
        ex = sample_uniform_conditioned(rng)
        assert len(ex.theory.predicates) == 30
        assert len(ex.theory.rules) == 120
        assert validate_example(ex).ok


def test_uniform_rejects_impossible_sizes():
    with pytest.raises(ValueError):
        sample_uniform_conditioned(random.Random(0), pred_count=5, rule_count=21)


def test_iter_draws_matches_draw_streams():
    raw = list(iter_draws(SamplerTag.RP, 7, seed=9, chunk_size=4))
    exs = draw(SamplerTag.RP, 4, seed=9) + draw(SamplerTag.RP, 3, seed=9, index=1)
    assert [(d.query, d.label) for d in raw] == [(e.query, e.label) for e in exs]


def test_stratified_counts():
    ds = generate_stratified(StratifiedSpec(depths=(0, 1, 2), per_depth=10, chunk_size=200), SamplerConfig(seed=1))
    assert len(ds) == 30
    assert ds.depth_counts() == {0: 10, 1: 10, 2: 10}
    meta = ds.metadata
    assert meta["seed"] == 1 and set(meta["acceptance_rates"]) == {"0", "1", "2"}
    assert meta["draws"] % 200 == 0


def test_stratified_label_balance():
    spec = StratifiedSpec(depths=(1, 2), per_depth=20, chunk_size=200, balance_labels=True)
    ds = generate_stratified(spec, SamplerConfig(seed=2))
    c = Counter((e.depth, e.label) for e in ds)
    assert all(c[(d, lab)] == 10 for d in (1, 2) for lab in (True, False))


def test_stratified_same_output_for_any_worker_count():
    base = StratifiedSpec(depths=(0, 3), per_depth=15, chunk_size=100)
    one = generate_stratified(base, SamplerConfig(seed=8))
    two = generate_stratified(StratifiedSpec(depths=(0, 3), per_depth=15, chunk_size=100, workers=2), SamplerConfig(seed=8))
    assert one.examples == two.examples


def test_smaller_run_is_a_prefix():
    cfg = SamplerConfig(seed=4)
    small = generate_stratified(StratifiedSpec(depths=(0, 1), per_depth=5, chunk_size=100), cfg)
    big = generate_stratified(StratifiedSpec(depths=(0, 1), per_depth=12, chunk_size=100), cfg)
    for d in (0, 1):
        assert [e for e in small if e.depth == d] == [e for e in big if e.depth == d][:5]


def test_acceptance_floor_guard():
    spec = StratifiedSpec(depths=(9,), per_depth=1000, chunk_size=100, acceptance_floor=0.5, guard_after=200)
    with pytest.raises(AcceptanceFloorError, match="depth=9"):
        generate_stratified(spec, SamplerConfig(seed=0))


def test_bad_specs():
    with pytest.raises(ValueError):
        StratifiedSpec(per_depth=0)
    with pytest.raises(ValueError):
        StratifiedSpec(balance_labels=True, per_depth=3)
    with pytest.raises(ValueError):
        SamplerConfig(lp_star_multiplicity=0)

"""
Removing #rule as a feature
===========================

Balance Pr(label | #rule) to 0.5 over #rule in [0, 80] while keeping the
#rule marginal and the dataset size, and compare with dropping only
majority-label examples.
"""

# %%
import random

from simplelogic.balance import (
    balance_downsample,
    criteria_report,
    estimate_oversample_ratio,
    make_plan,
    naive_minimal_drop,
)
from simplelogic.features import Profile, conditional_label_histogram
from simplelogic.sampler import SamplerConfig, StratifiedSpec, generate_stratified

pool = [Profile.of(e) for e in generate_stratified(StratifiedSpec(per_depth=6000), SamplerConfig(seed=3))]
ref = conditional_label_histogram(pool, "rule_count")
print("pool", len(pool), "k =", round(estimate_oversample_ratio(ref, (0, 80)), 1))

# %%
# the pool must hold about k times the target
plan = make_plan(ref, (0, 80), 3000)
out = balance_downsample(pool, plan, random.Random(0))
rep = criteria_report(list(out), plan)
print({k: rep[k] for k in ("size", "max_balance_deviation", "tv_distance", "ok")})

# %%
# Dropping only the majority label keeps more data but distorts the marginal.
naive = naive_minimal_drop(pool, "rule_count", (0, 80))
rep = criteria_report(naive, make_plan(ref, (0, 80), len(naive)))
print(len(naive), {k: rep[k] for k in ("max_balance_deviation", "tv_distance", "marginal_ok")})

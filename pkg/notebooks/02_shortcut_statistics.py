"""
Statistical features in RP data
===============================

A depth-stratified RP sample (the shape the datasets take), then the
label rate per #rule bin, per branching_factor quartile and for a few
joint cells. Raise PER_DEPTH for tighter numbers; 30000 takes ~5 minutes.
"""

# %%
import os

from simplelogic.features import conditional_label_histogram, joint_conditional, quartile_rates, Profile
from simplelogic.sampler import SamplerConfig, StratifiedSpec, generate_stratified

PER_DEPTH = int(os.environ.get("PER_DEPTH", 3000))
ds = generate_stratified(StratifiedSpec(per_depth=PER_DEPTH), SamplerConfig(seed=11))
rows = [Profile.of(e) for e in ds]
print(len(rows), "examples;", ds.metadata["draws"], "draws")

# %%
h = conditional_label_histogram(rows, "rule_count")
for b in range(0, 121, 10):
    if h.support(b):
        print(f"#rule={b:3d}  n={h.support(b):5d}  Pr(label=1)={h.conditional(b):.3f}")

# %%
# Population quartiles of branching_factor, lowest first.
for q, (p, n) in enumerate(quartile_rates(rows, "branching_factor"), 1):
    print(f"Q{q}: Pr(label=1)={p:.3f} n={n}")

# %%
# Conditioning on more features makes the label more predictable.
specs = ["fact_count", "branching_factor", "rule_count"]
for cell in ([15], [15, (2.65, 2.75)], [15, (2.65, 2.75), 58]):
    r = joint_conditional(rows, specs[: len(cell)], cell)
    note = " (low confidence)" if r.low_confidence else ""
    print(cell, r.support, r.probability, note)

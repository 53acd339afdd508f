"""
A transformer that runs forward chaining
========================================

Fixed weights, 768-wide vectors, three attention heads. Each layer is one
round of rule application; the trace should match the solver's depths.
"""

# %%
import numpy as np

from simplelogic.core import SamplerTag
from simplelogic.sampler import draw
from simplelogic.simnet import (
    ConstructedModelConfig,
    build_params,
    check_attention_ranges,
    encode_input,
    generate_signatures,
    reasoning_layer_step,
    run_constructed_model,
    solver_trace,
    verify_agreement,
)

sigs = generate_signatures(0)
print("signatures", sigs.vectors.shape, "max dot", round(sigs.max_dot(), 3),
      "trials: median", np.median(sigs.trials), "max", max(sigs.trials))

# %%
e = next(x for x in draw(SamplerTag.RP, 200, seed=4) if x.label and x.depth >= 4)
res = run_constructed_model(e, sigs)
for k, (got, want) in enumerate(zip(res.trace, solver_trace(e, 11))):
    print(k, len(got), got == want)
print("label", res.label, "query value", round(res.query_value, 6), "depth", e.depth)

# %%
# Attention values stay in the separation bands layer after layer.
params = build_params(ConstructedModelConfig())
st = encode_input(e, sigs)
for k in range(4):
    print(k, check_attention_ranges(st, params))
    st = reasoning_layer_step(st, params)

# %%
sample = [x for x in draw(SamplerTag.LP, 300, seed=5) if x.depth <= 10]
print(verify_agreement(sample, sigs).to_json()["accuracy"])

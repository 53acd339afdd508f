"""
Solving SimpleLogic problems
============================

Parse the four worked examples in ``tests/data``, solve them, and
compare with a brute-force enumeration of proof trees.
"""

# %%
from pathlib import Path

from simplelogic.solver import brute_force_oracle, forward_chain, label_and_depth
from simplelogic.textcodec import parse_corpus, render_example

text = (Path(__file__).resolve().parents[1] / "tests/data/reference_examples.txt").read_text()
blocks = parse_corpus(text)

# %%
# Stated answer next to what the solver computes. Block 3 disagrees on
# depth; the tree enumeration below sides with the solver.
for i, p in enumerate(blocks, 1):
    e = p.example
    print(f"block {i}: stated ({p.stated_label}, {p.stated_depth})  solved ({e.label}, {e.depth})  "
          f"{len(e.theory.predicates)} preds, {len(e.theory.rules)} rules")

# %%
for i, p in enumerate(blocks, 1):
    e = p.example
    r = brute_force_oracle(e.theory, e.query, cap=8, node_budget=20_000_000)
    print(f"block {i}: oracle ({r.label}, {r.depth}) cap_hit={r.cap_hit}")

# %%
# How deep does forward chaining reach in block 2?
proved = forward_chain(blocks[1].example.theory)
by_depth = {}
for p, d in proved.items():
    by_depth.setdefault(d, []).append(p)
print({d: len(ps) for d, ps in sorted(by_depth.items())})

# %%
print(render_example(blocks[0].example, "SECTION21"))

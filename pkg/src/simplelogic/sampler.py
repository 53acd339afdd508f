"""Samplers over the SimpleLogic problem space and stratified dataset assembly.

Every sampler takes a :class:`random.Random` and returns one
:class:`~simplelogic.core.Example`. Draws that would violate a problem-space
constraint (for instance fewer than five predicates actually appearing in the
theory) are rejected and redrawn, so every returned example validates.

Stratified generation splits the draw sequence into fixed-size chunks. Chunk
``c`` uses its own stream derived from ``(seed, c)``, and chunks are consumed
strictly in index order, so the output does not depend on the worker count.
"""

from __future__ import annotations

import random
import time
from collections import Counter, deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterator, NamedTuple

import numpy as np

from .core import (
    MAX_BODY,
    MAX_PREDS,
    MIN_PREDS,
    RULES_PER_PRED,
    VOCAB_SIZE,
    Dataset,
    Example,
    Rule,
    SamplerTag,
    Theory,
)
from .solver import DEFAULT_CAP, solve_parts


@dataclass(frozen=True)
class SamplerConfig:
    vocab_size: int = VOCAB_SIZE
    permissive_facts: bool = False
    lp_star_multiplicity: int = 3
    seed: int = 0
    depth_cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.lp_star_multiplicity < 1:
            raise ValueError("lp_star_multiplicity must be >= 1")
        if self.vocab_size < MAX_PREDS:
            raise ValueError(f"vocabulary must hold at least {MAX_PREDS} predicates")


DEFAULT_CONFIG = SamplerConfig()


class Draw(NamedTuple):
    """An admissible draw before it is wrapped as an :class:`Example`.

    ``rules`` are plain ``(body, head)`` pairs; ``label`` and ``depth`` come
    from the solver.
    """

    facts: list[int]
    rules: list[tuple]
    query: int
    preds: frozenset[int]
    label: bool
    depth: int


def _distinct(rnd: Callable[[], float], items: list[int], k: int) -> tuple[int, ...]:
    # k distinct uniform picks; k <= 3 so rejection is cheaper than random.sample
    n = len(items)
    a = items[int(rnd() * n)]
    if k == 1:
        return (a,)
    b = a
    while b == a:
        b = items[int(rnd() * n)]
    if k == 2:
        return (a, b)
    c = a
    while c == a or c == b:
        c = items[int(rnd() * n)]
    return (a, b, c)


def _sample(rnd: Callable[[], float], population, k: int) -> list:
    # partial Fisher-Yates driven by rnd(); same law as random.sample
    pool = list(population)
    n = len(pool)
    for i in range(k):
        j = i + int(rnd() * (n - i))
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]


def _appearing(facts, rules, query: int) -> frozenset[int]:
    preds = set(facts)
    preds.add(query)
    for body, head in rules:
        preds.update(body)
        preds.add(head)
    return frozenset(preds)


def _admissible(preds: frozenset, facts, rules, permissive_facts: bool) -> bool:
    n = len(preds)
    if not MIN_PREDS <= n <= MAX_PREDS:
        return False
    if len(rules) > RULES_PER_PRED * n:
        return False
    return bool(facts) or permissive_facts


def to_example(d: Draw, tag: SamplerTag) -> Example:
    rules = tuple(Rule(body, head) for body, head in d.rules)
    return Example(Theory(d.preds, tuple(d.facts), rules), d.query, d.label, d.depth, tag)


def draw_rp(rng: random.Random, config: SamplerConfig = DEFAULT_CONFIG) -> Draw:
    lo_facts = 0 if config.permissive_facts else 1
    rnd = rng.random
    vocab = range(config.vocab_size)
    while True:
        n = rng.randint(MIN_PREDS, MAX_PREDS)
        preds = _sample(rnd, vocab, n)
        rule_num = rng.randint(0, RULES_PER_PRED * n)
        rules = []
        append = rules.append
        while rule_num:
            # inlined _distinct: this loop dominates generation time
            k = int(rnd() * MAX_BODY)
            a = preds[int(rnd() * n)]
            if k == 0:
                body = (a,)
            else:
                b = a
                while b == a:
                    b = preds[int(rnd() * n)]
                if k == 1:
                    body = (a, b)
                else:
                    c = a
                    while c == a or c == b:
                        c = preds[int(rnd() * n)]
                    body = (a, b, c)
            head = preds[int(rnd() * n)]
            if head not in body:
                append((body, head))
                rule_num -= 1
        facts = _sample(rnd, preds, rng.randint(lo_facts, n))
        query = preds[int(rnd() * n)]
        present = _appearing(facts, rules, query)
        if _admissible(present, facts, rules, config.permissive_facts):
            label, depth = solve_parts(facts, rules, query, config.depth_cap)
            return Draw(facts, rules, query, present, label, depth)


def sample_rp(rng: random.Random, config: SamplerConfig = DEFAULT_CONFIG) -> Example:
    """Rule-Priority: draw rules first, then facts and query; label by the solver."""
    return to_example(draw_rp(rng, config), SamplerTag.RP)


def _layers(rng: random.Random, preds: list[int]) -> list[list[int]]:
    n = len(preds)
    count = rng.randint(1, n // 2)
    cuts = sorted(rng.sample(range(1, n), count - 1))
    bounds = [0, *cuts, n]
    return [preds[a:b] for a, b in zip(bounds, bounds[1:])]


def _draw_layered(rng: random.Random, config: SamplerConfig, multiplicity: int) -> Draw:
    rnd = rng.random
    while True:
        n = rng.randint(MIN_PREDS, MAX_PREDS)
        preds = rng.sample(range(config.vocab_size), n)
        rule_num = rng.randint(0, RULES_PER_PRED * n)
        layers = _layers(rng, preds)
        label: dict[int, bool] = {}
        rules = []
        for i, layer in enumerate(layers):
            for p in layer:
                q = rng.randint(0, 1) == 1
                if i == 0:
                    label[p] = q
                    continue
                cand = [c for c in layers[i - 1] if label[c] == q]
                if q and not cand:
                    # no True predecessor can support p
                    q = False
                    cand = [c for c in layers[i - 1] if not label[c]]
                label[p] = q
                for _ in range(multiplicity if q else 1):
                    if not cand:
                        break
                    k = min(rng.randint(1, MAX_BODY), len(cand))
                    rules.append((tuple(rng.sample(cand, k)), p))
        budget = min(rule_num, RULES_PER_PRED * n)
        while len(rules) < budget:
            body = _distinct(rnd, preds, 1 + int(rnd() * MAX_BODY))
            head = preds[int(rnd() * n)]
            if head in body:
                continue
            if not label[head] and all(label[b] for b in body):
                continue
            rules.append((body, head))
        facts = [p for p in layers[0] if label[p]]
        query = rng.choice(preds)
        present = _appearing(facts, rules, query)
        if not _admissible(present, facts, rules, config.permissive_facts):
            continue
        solved, depth = solve_parts(facts, rules, query, config.depth_cap)
        if solved != label[query]:
            raise AssertionError(f"layered draw disagrees with the solver on query {query}")
        return Draw(facts, rules, query, present, solved, depth)


def draw_lp(rng: random.Random, config: SamplerConfig = DEFAULT_CONFIG) -> Draw:
    return _draw_layered(rng, config, 1)


def draw_lp_star(rng: random.Random, config: SamplerConfig = DEFAULT_CONFIG) -> Draw:
    return _draw_layered(rng, config, config.lp_star_multiplicity)


def sample_lp(rng: random.Random, config: SamplerConfig = DEFAULT_CONFIG) -> Example:
    """Label-Priority: assign labels by layer first, then add consistent rules."""
    return to_example(draw_lp(rng, config), SamplerTag.LP)


def sample_lp_star(
    rng: random.Random,
    multiplicity: int | None = None,
    config: SamplerConfig = DEFAULT_CONFIG,
) -> Example:
    """LP with ``multiplicity`` supporting rules per True predicate above layer 1.

    With ``multiplicity == 1`` this consumes the stream exactly like
    :func:`sample_lp` and returns the same theory.
    """
    m = config.lp_star_multiplicity if multiplicity is None else multiplicity
    if m < 1:
        raise ValueError("multiplicity must be >= 1")
    return to_example(_draw_layered(rng, config, m), SamplerTag.LPSTAR)


def draw_uniform(
    rng: random.Random,
    config: SamplerConfig = DEFAULT_CONFIG,
    pred_count: int = MAX_PREDS,
    rule_count: int = 120,
    max_attempts: int = 10_000,
) -> Draw:
    if not MIN_PREDS <= pred_count <= MAX_PREDS:
        raise ValueError(f"pred_count must be in [{MIN_PREDS}, {MAX_PREDS}]")
    if not 0 <= rule_count <= RULES_PER_PRED * pred_count:
        raise ValueError(f"rule_count must be in [0, {RULES_PER_PRED * pred_count}]")
    rnd = rng.random
    for _ in range(max_attempts):
        preds = _sample(rnd, range(config.vocab_size), pred_count)
        rules = []
        for _ in range(rule_count):
            body = _distinct(rnd, preds, 1 + int(rnd() * MAX_BODY))
            head = preds[int(rnd() * pred_count)]
            while head in body:
                head = preds[int(rnd() * pred_count)]
            rules.append((body, head))
        facts = [p for p in preds if rnd() < 0.5]
        if not facts and not config.permissive_facts:
            continue
        query = preds[int(rnd() * pred_count)]
        present = _appearing(facts, rules, query)
        if len(present) == pred_count:
            label, depth = solve_parts(facts, rules, query, config.depth_cap)
            return Draw(facts, rules, query, present, label, depth)
    raise RuntimeError(f"no admissible draw in {max_attempts} attempts")


def sample_uniform_conditioned(
    rng: random.Random,
    pred_count: int = MAX_PREDS,
    rule_count: int = 120,
    config: SamplerConfig = DEFAULT_CONFIG,
) -> Example:
    """Uniform example given exactly ``pred_count`` predicates and ``rule_count`` rules.

    Rules are i.i.d. uniform, the fact set is a uniform subset and the query
    is uniform. Draws in which some predicate never appears are rejected,
    which is the conditioning on ``#pred``.
    """
    return to_example(draw_uniform(rng, config, pred_count, rule_count), SamplerTag.UNIFORM)


DRAWS: dict[SamplerTag, Callable[[random.Random, SamplerConfig], Draw]] = {
    SamplerTag.RP: draw_rp,
    SamplerTag.LP: draw_lp,
    SamplerTag.LPSTAR: draw_lp_star,
    SamplerTag.UNIFORM: draw_uniform,
}


def stream(seed: int, index: int) -> random.Random:
    """Independent generator for chunk ``index`` of the run seeded with ``seed``."""
    state = np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(4, dtype=np.uint64)
    return random.Random(int.from_bytes(state.tobytes(), "little"))


def draw(tag: SamplerTag, count: int, seed: int, config: SamplerConfig = DEFAULT_CONFIG, index: int = 0) -> list[Example]:
    """``count`` unconditioned draws from one stream."""
    tag = SamplerTag(tag)
    rng = stream(seed, index)
    fn = DRAWS[tag]
    return [to_example(fn(rng, config), tag) for _ in range(count)]


def iter_draws(
    tag: SamplerTag, count: int, seed: int, config: SamplerConfig = DEFAULT_CONFIG, chunk_size: int = 20_000
) -> Iterator[Draw]:
    """``count`` raw draws, taken chunk by chunk from streams ``0, 1, ...``.

    Nothing is wrapped as an :class:`Example`, which keeps multi-million
    draw statistics cheap; use ``depth_cap=0`` when only labels matter.
    """
    fn = DRAWS[SamplerTag(tag)]
    index = 0
    while count > 0:
        rng = stream(seed, index)
        for _ in range(min(chunk_size, count)):
            yield fn(rng, config)
        count -= chunk_size
        index += 1


# --------------------------------------------------------------- stratified


class AcceptanceFloorError(RuntimeError):
    """A depth bucket fills too slowly to finish."""


@dataclass(frozen=True)
class StratifiedSpec:
    depths: tuple[int, ...] = tuple(range(7))
    per_depth: int = 80_000
    sampler: SamplerTag = SamplerTag.RP
    workers: int = 1
    chunk_size: int = 2_000
    balance_labels: bool = False
    acceptance_floor: float = 1e-4
    guard_after: int = 200_000

    def __post_init__(self):
        object.__setattr__(self, "depths", tuple(sorted(set(self.depths))))
        object.__setattr__(self, "sampler", SamplerTag(self.sampler))
        if self.per_depth < 1:
            raise ValueError("per_depth must be >= 1")
        if self.workers < 1 or self.chunk_size < 1:
            raise ValueError("workers and chunk_size must be >= 1")
        if not self.depths or self.depths[0] < 0:
            raise ValueError("depths must be a non-empty set of non-negative integers")
        if self.balance_labels and self.per_depth % 2:
            raise ValueError("label balancing needs an even per_depth")


@dataclass
class _Chunk:
    index: int
    draws: int
    hits: list[Example] = field(default_factory=list)
    depths: Counter = field(default_factory=Counter)


def _run_chunk(args: tuple) -> _Chunk:
    index, spec, config, wanted = args
    rng = stream(config.seed, index)
    fn = DRAWS[spec.sampler]
    out = _Chunk(index, spec.chunk_size)
    for _ in range(spec.chunk_size):
        d = fn(rng, config)
        out.depths[d.depth] += 1
        if d.depth in wanted:
            out.hits.append(to_example(d, spec.sampler))
    return out


def _chunks(spec: StratifiedSpec, config: SamplerConfig, open_depths: Callable[[], frozenset]):
    """Chunk results in index order, computed up to ``2 * workers`` chunks ahead.

    A chunk only materialises hits for depths still open when it is
    submitted. Buckets never reopen, so whatever a chunk leaves out would
    have been discarded on arrival anyway.
    """
    if spec.workers == 1:
        i = 0
        while True:
            yield _run_chunk((i, spec, config, open_depths()))
            i += 1
    with ProcessPoolExecutor(spec.workers) as pool:
        window: deque = deque()
        nxt = 0
        try:
            while True:
                while len(window) < 2 * spec.workers:
                    window.append(pool.submit(_run_chunk, (nxt, spec, config, open_depths())))
                    nxt += 1
                yield window.popleft().result()
        finally:
            for fut in window:
                fut.cancel()


def generate_stratified(spec: StratifiedSpec, config: SamplerConfig = DEFAULT_CONFIG) -> Dataset:
    """Fill one bucket per depth with ``spec.per_depth`` examples.

    Depth is computed with cap ``max(depths) + 1``, which is exact for every
    depth in range. Output order is by depth, then by draw order.
    """
    config = replace(config, depth_cap=max(spec.depths) + 1)
    half = spec.per_depth // 2
    if spec.balance_labels:
        need = {(d, lab): half for d in spec.depths for lab in (True, False)}
    else:
        need = {(d, None): spec.per_depth for d in spec.depths}
    buckets: dict[tuple, list[Example]] = {k: [] for k in need}
    seen = {d: 0 for d in spec.depths}
    draws = 0
    start = time.perf_counter()

    def open_depths() -> frozenset:
        return frozenset(k[0] for k in need if len(buckets[k]) < need[k])

    for chunk in _chunks(spec, config, open_depths):
        draws += chunk.draws
        for d in seen:
            seen[d] += chunk.depths.get(d, 0)
        for ex in chunk.hits:
            key = (ex.depth, ex.label if spec.balance_labels else None)
            if len(buckets[key]) < need[key]:
                buckets[key].append(ex)
        open_keys = [k for k in need if len(buckets[k]) < need[k]]
        if not open_keys:
            break
        if draws >= spec.guard_after:
            for key in open_keys:
                # an open bucket has kept every hit so far
                rate = len(buckets[key]) / draws
                if rate < spec.acceptance_floor:
                    raise AcceptanceFloorError(
                        f"bucket depth={key[0]}"
                        + (f" label={key[1]}" if key[1] is not None else "")
                        + f" accepts {rate:.2e} of draws after {draws} draws (floor {spec.acceptance_floor:g})"
                    )

    examples = [ex for key in sorted(need, key=_bucket_order) for ex in buckets[key]]
    elapsed = time.perf_counter() - start
    meta = {
        "seed": config.seed,
        "sampler": spec.sampler.value,
        "spec": {**asdict(spec), "sampler": spec.sampler.value},
        "config": asdict(config),
        "draws": draws,
        "depth_counts": {str(d): sum(len(buckets[k]) for k in need if k[0] == d) for d in spec.depths},
        "acceptance_rates": {str(d): seen[d] / draws for d in spec.depths},
        "wall_time_s": elapsed,
    }
    return Dataset(examples, meta)


def _bucket_order(key: tuple) -> tuple:
    depth, label = key
    return (depth, 0 if label is None else int(not label))

"""A fixed-weight transformer that runs forward chaining.

Every rule, fact and the query become one 768-wide "meaningful vector"
``L_A | L_B | L_C | R | 0^512``. Each 64-wide slot is a 63-dim predicate
signature followed by one truth-value cell. A reasoning layer is

* attention: three heads; head ``k`` lets slot ``L_k`` look for right-hand
  sides carrying the same signature and copies their truth value into
  ``L_k``'s value cell (residual add);
* feed-forward: ``R^v <- 10 [relu(s - 2.3) - relu(s - 2.4)]`` with
  ``s = L_A^v + L_B^v + L_C^v``, while the ``L`` value cells are reset to 0.

So one layer is one round of forward chaining. Two extra vectors anchor the
dummy predicates: ``T -> T`` keeps the always-true dummy true and
``F -> F`` gives the always-false dummy a right-hand side to read.

Parameters are stored as ordinary dense matrices (``W_q``, ``W_k``, ...).
:func:`reasoning_layer_step` multiplies only the rows those matrices use;
:func:`dense_layer_step` runs the full products and is kept for checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import VOCAB_SIZE, Example
from .solver import forward_chain

WIDTH = 768
SLOT = 64
SIG = SLOT - 1
HEAD_DIM = 64
BETA_MIN = 300 * math.log(10)

TOP = VOCAB_SIZE  # always-true dummy
BOT = VOCAB_SIZE + 1  # always-false dummy

# slot offsets
LA, LB, LC, RR = 0, SLOT, 2 * SLOT, 3 * SLOT
L_SLOTS = (LA, LB, LC)


def value_cell(slot: int) -> int:
    return slot + SIG


# ------------------------------------------------------------- signatures


@dataclass(frozen=True)
class SignatureSet:
    """Unit signatures; row ``i`` belongs to predicate ``i``, rows 150/151 to the dummies."""

    vectors: np.ndarray
    trials: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.vectors)

    def __getitem__(self, pid: int) -> np.ndarray:
        return self.vectors[pid]

    def max_dot(self) -> float:
        if len(self.vectors) < 2:
            return -1.0
        g = self.vectors @ self.vectors.T
        np.fill_diagonal(g, -np.inf)
        return float(g.max())


def generate_signatures(
    rng: np.random.Generator | int,
    count: int = VOCAB_SIZE + 2,
    max_trials: int = 10_000,
    dim: int = SIG,
    bound: float = 0.5,
) -> SignatureSet:
    """Rejection-sample ``count`` unit vectors with pairwise dot products below ``bound``.

    ``trials[i]`` is the number of candidates drawn before vector ``i`` was
    accepted (at least 1).
    """
    if count > VOCAB_SIZE + 2:
        raise ValueError(f"at most {VOCAB_SIZE + 2} signatures (vocabulary plus two dummies)")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    out = np.zeros((count, dim))
    trials = []
    for i in range(count):
        for t in range(1, max_trials + 1):
            v = rng.standard_normal(dim)
            v /= np.linalg.norm(v)
            if i == 0 or np.max(out[:i] @ v) < bound:
                out[i] = v
                trials.append(t)
                break
        else:
            raise RuntimeError(f"signature {i}: no admissible vector in {max_trials} trials")
    return SignatureSet(out, tuple(trials))


# ------------------------------------------------------------- parameters


@dataclass(frozen=True)
class ConstructedModelConfig:
    layers: int = 12
    beta: float = BETA_MIN + 1
    head_dim: int = HEAD_DIM

    def __post_init__(self):
        if self.layers < 3:
            raise ValueError("need at least 3 layers (parsing, reasoning, output)")
        if not self.beta > BETA_MIN:
            raise ValueError(f"beta must exceed 300 ln 10 = {BETA_MIN:.2f}")

    @property
    def max_depth(self) -> int:
        return self.layers - 2


@dataclass(frozen=True)
class LayerParams:
    """Weights of one reasoning layer (shared by all of them)."""

    w_q: np.ndarray  # (3, 768, 64)
    b_q: np.ndarray  # (3, 64)
    w_k: np.ndarray  # (3, 768, 64)
    w_v: np.ndarray  # (3, 768, 64)
    w_o: np.ndarray  # (3, 64, 768)
    w_1: np.ndarray  # (768, hidden)
    b_1: np.ndarray  # (hidden,)
    w_2: np.ndarray  # (hidden, 768)
    scale: float = field(default=math.sqrt(HEAD_DIM))


def build_params(config: ConstructedModelConfig) -> LayerParams:
    d = config.head_dim
    w_q = np.zeros((3, WIDTH, d))
    b_q = np.zeros((3, d))
    w_k = np.zeros((3, WIDTH, d))
    w_v = np.zeros((3, WIDTH, d))
    w_o = np.zeros((3, d, WIDTH))
    for h, slot in enumerate(L_SLOTS):
        w_q[h, slot : slot + SIG, :SIG] = np.eye(SIG)
        b_q[h, SIG] = 0.25
        w_k[h, RR : RR + SLOT, :SLOT] = config.beta * np.eye(SLOT)
        w_v[h, value_cell(RR), SIG] = 1.0
        w_o[h, SIG, value_cell(slot)] = 1.0

    # hidden units: the two ramps, then one "copy" unit per cell to clear
    clear = [value_cell(RR)] + [value_cell(s) for s in L_SLOTS]
    hidden = 2 + len(clear)
    w_1 = np.zeros((WIDTH, hidden))
    b_1 = np.zeros(hidden)
    w_2 = np.zeros((hidden, WIDTH))
    for s in L_SLOTS:
        w_1[value_cell(s), 0] = 1.0
        w_1[value_cell(s), 1] = 1.0
    b_1[0], b_1[1] = -2.3, -2.4
    w_2[0, value_cell(RR)] = 10.0
    w_2[1, value_cell(RR)] = -10.0
    for j, cell in enumerate(clear, start=2):
        w_1[cell, j] = 1.0
        w_2[j, cell] = -1.0
    return LayerParams(w_q, b_q, w_k, w_v, w_o, w_1, b_1, w_2, math.sqrt(d))


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _softmax(scores: np.ndarray) -> np.ndarray:
    scores = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(scores)
    return e / e.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------- encoding


@dataclass(frozen=True)
class LayerState:
    """Meaningful vectors (one row per position) plus the predicate in each slot."""

    x: np.ndarray  # (positions, 768)
    slots: np.ndarray  # (positions, 4) predicate ids, TOP/BOT for dummies
    kinds: tuple[str, ...]  # "query", "fact", "rule", "body", "anchor"

    def __len__(self) -> int:
        return len(self.x)

    def with_x(self, x: np.ndarray) -> "LayerState":
        return LayerState(x, self.slots, self.kinds)

    def values(self, slot: int) -> np.ndarray:
        return self.x[:, value_cell(slot)]

    def proved(self) -> frozenset[int]:
        """Predicates whose right-hand side value exceeds 0.5 somewhere."""
        heads = self.slots[:, 3]
        on = self.values(RR) > 0.5
        return frozenset(int(p) for p in heads[on] if p < VOCAB_SIZE)


def encode_input(example: Example, signatures: SignatureSet) -> LayerState:
    """Parsing layer: one meaningful vector per query, fact, rule and body atom.

    Order: query ``Q -> Q``; facts ``T -> F``; rules (short bodies padded
    with ``T``); one ``F -> P`` per body atom; anchors ``T -> T`` and
    ``F -> F``. Fact right-hand sides and the ``T -> T`` anchor start at 1,
    every other value cell at 0.
    """
    th = example.theory
    needed = set(th.predicates) | {example.query}
    if len(signatures) < BOT + 1:
        raise ValueError(f"signature set needs {BOT + 1} vectors including the two dummies")
    missing = sorted(p for p in needed if not 0 <= p < VOCAB_SIZE)
    if missing:
        raise ValueError(f"no signature for predicates {missing}")

    rows: list[tuple[int, int, int, int]] = []
    kinds: list[str] = []
    start_true: list[bool] = []

    def add(lhs: Sequence[int], rhs: int, kind: str, true: bool = False):
        lhs = list(lhs) + [TOP] * (3 - len(lhs))
        rows.append((lhs[0], lhs[1], lhs[2], rhs))
        kinds.append(kind)
        start_true.append(true)

    q = example.query
    add([q, TOP, TOP], q, "query")
    for f in th.facts:
        add([TOP], f, "fact", True)
    for r in th.rules:
        add(r.body, r.head, "rule")
    for r in th.rules:
        for b in r.body:
            add([BOT], b, "body")
    add([TOP], TOP, "anchor", True)
    add([BOT, BOT, BOT], BOT, "anchor")

    slots = np.array(rows, dtype=np.int64)
    x = np.zeros((len(rows), WIDTH))
    sig = signatures.vectors
    for k, off in enumerate((LA, LB, LC, RR)):
        x[:, off : off + SIG] = sig[slots[:, k]]
    x[:, value_cell(RR)] = np.array(start_true, dtype=float)
    return LayerState(x, slots, tuple(kinds))


# --------------------------------------------------------------- the layer


def attention_outputs(state: LayerState, params: LayerParams) -> np.ndarray:
    """Value each head writes into its ``L`` slot, shape (positions, 3)."""
    x = state.x
    k_rows = slice(RR, RR + SLOT)
    keys = x[:, k_rows] @ params.w_k[0, k_rows, :]  # identical for every head
    vals = x[:, value_cell(RR)]
    out = np.empty((len(x), 3))
    for h, slot in enumerate(L_SLOTS):
        rows = slice(slot, slot + SIG)
        q = x[:, rows] @ params.w_q[h, rows, :] + params.b_q[h]
        attn = _softmax(q @ keys.T / params.scale)
        out[:, h] = attn @ (vals * params.w_v[h, value_cell(RR), SIG])
    return out


def reasoning_layer_step(state: LayerState, params: LayerParams) -> LayerState:
    """One round of forward chaining, touching only the non-zero weight rows."""
    x = state.x.copy()
    heads = attention_outputs(state, params)
    for h, slot in enumerate(L_SLOTS):
        x[:, value_cell(slot)] += heads[:, h] * params.w_o[h, SIG, value_cell(slot)]
    cells = np.flatnonzero(np.any(params.w_1 != 0, axis=1))
    hidden = _relu(x[:, cells] @ params.w_1[cells] + params.b_1)
    out_cells = np.flatnonzero(np.any(params.w_2 != 0, axis=0))
    x[:, out_cells] += hidden @ params.w_2[:, out_cells]
    return state.with_x(x)


def dense_layer_step(state: LayerState, params: LayerParams) -> LayerState:
    """Same computation as :func:`reasoning_layer_step` with full matrix products."""
    x = state.x
    attn_out = np.zeros_like(x)
    for h in range(3):
        q = x @ params.w_q[h] + params.b_q[h]
        k = x @ params.w_k[h]
        v = x @ params.w_v[h]
        attn_out += (_softmax(q @ k.T / params.scale) @ v) @ params.w_o[h]
    x = x + attn_out
    x = x + _relu(x @ params.w_1 + params.b_1) @ params.w_2
    return state.with_x(x)


# ----------------------------------------------------------------- running


@dataclass(frozen=True)
class RunResult:
    label: bool
    trace: tuple[frozenset[int], ...]  # trace[k]: proved after k reasoning steps (0 = encoding)
    query_value: float


def run_constructed_model(
    example: Example,
    signatures: SignatureSet,
    config: ConstructedModelConfig = ConstructedModelConfig(),
    params: LayerParams | None = None,
) -> RunResult:
    """Encode, apply ``layers - 2`` reasoning layers and the output layer, read ``[CLS]``."""
    params = params or build_params(config)
    state = encode_input(example, signatures)
    trace = [state.proved()]
    for _ in range(config.layers - 1):
        state = reasoning_layer_step(state, params)
        trace.append(state.proved())
    qv = float(state.values(RR)[0])
    return RunResult(qv > 0.5, tuple(trace), qv)


def check_attention_ranges(state: LayerState, params: LayerParams, eps: float = 1e-9) -> dict:
    """Compare every ``L`` slot's attention value with the separation bands.

    A slot whose predicate has a true right-hand side somewhere must receive
    a value in [0.8, 1.0]; any other slot a value in [0, 0.2]. ``eps``
    absorbs float rounding at the band edges.
    """
    heads = attention_outputs(state, params)
    rhs_true = set(int(p) for p in state.slots[state.values(RR) > 0.5, 3])
    hi_vals, lo_vals = [], []
    for h in range(3):
        for pos in range(len(state)):
            (hi_vals if int(state.slots[pos, h]) in rhs_true else lo_vals).append(heads[pos, h])
    hi = np.array(hi_vals)
    lo = np.array(lo_vals)
    return {
        "true_min": float(hi.min()) if hi.size else None,
        "true_max": float(hi.max()) if hi.size else None,
        "false_min": float(lo.min()) if lo.size else None,
        "false_max": float(lo.max()) if lo.size else None,
        "ok": bool(
            ((hi >= 0.8 - eps) & (hi <= 1.0 + eps)).all() and ((lo >= -eps) & (lo <= 0.2 + eps)).all()
        ),
    }


@dataclass
class AgreementReport:
    total: int = 0
    agree: int = 0
    per_depth: dict = field(default_factory=dict)  # depth -> [total, agree]
    disagreements: list = field(default_factory=list)

    @property
    def accuracy(self) -> float | None:
        return self.agree / self.total if self.total else None

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "agree": self.agree,
            "accuracy": self.accuracy,
            "per_depth": {str(d): {"total": t, "agree": a} for d, (t, a) in sorted(self.per_depth.items())},
            "disagreements": self.disagreements,
        }


def verify_agreement(
    examples: Iterable[Example],
    signatures: SignatureSet,
    config: ConstructedModelConfig = ConstructedModelConfig(),
) -> AgreementReport:
    """Run the constructed model on every example and compare with the stored labels."""
    examples = list(examples)
    too_deep = [i for i, e in enumerate(examples) if e.depth > config.max_depth]
    if too_deep:
        i = too_deep[0]
        raise ValueError(
            f"{len(too_deep)} example(s) deeper than {config.max_depth} = layers - 2, "
            f"first at index {i} with depth {examples[i].depth}"
        )
    params = build_params(config)
    report = AgreementReport()
    for i, ex in enumerate(examples):
        res = run_constructed_model(ex, signatures, config, params)
        ok = res.label == ex.label
        report.total += 1
        report.agree += ok
        cell = report.per_depth.setdefault(ex.depth, [0, 0])
        cell[0] += 1
        cell[1] += ok
        if not ok:
            report.disagreements.append(
                {"index": i, "example": ex.to_json(), "model_label": res.label, "query_value": res.query_value}
            )
    return report


def solver_trace(example: Example, steps: int) -> tuple[frozenset[int], ...]:
    """Predicates with proof depth <= k, for k = 0..steps (what the trace should show)."""
    depth = forward_chain(example.theory)
    return tuple(frozenset(p for p, d in depth.items() if d <= k) for k in range(steps + 1))

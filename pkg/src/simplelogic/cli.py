"""``simplelogic`` command line.

Subcommands: generate, solve, stats, balance, render, parse, simulate, verify.
Exit codes: 0 ok, 1 usage, 2 data error, 3 infeasible balancing plan.
Every command that writes an artifact also writes ``<out>.manifest.json``
with the flags, seed, version, wall time and SHA-256 of each output.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import random
import sys
import time
from pathlib import Path

from . import __version__
from . import balance as bal
from . import features as feat
from . import simnet
from . import textcodec as tc
from .core import DataError, SamplerTag, Vocabulary, iter_jsonl, read_jsonl, write_jsonl
from .sampler import AcceptanceFloorError, SamplerConfig, StratifiedSpec, generate_stratified
from .solver import DEFAULT_CAP, label_and_depth

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE = 0, 1, 2, 3

SAMPLERS = {"rp": SamplerTag.RP, "lp": SamplerTag.LP, "lpstar": SamplerTag.LPSTAR, "uniform": SamplerTag.UNIFORM}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------- helpers


def parse_depths(text: str) -> tuple[int, ...]:
    """``"0..6"`` or ``"0,2,5"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            out = tuple(range(int(lo), int(hi) + 1))
        else:
            out = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"bad depth list {text!r}; use e.g. 0..6 or 0,1,2") from None
    if not out or min(out) < 0:
        raise UsageError(f"bad depth list {text!r}")
    return out


def parse_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"bad range {text!r}; use LO:HI") from None
    if lo > hi:
        raise UsageError(f"empty range {text!r}")
    return lo, hi


def parse_cell(text: str, n: int) -> list:
    parts = text.split(",")
    if len(parts) != n:
        raise UsageError(f"--cell needs {n} comma-separated entries, got {len(parts)}")
    out = []
    for p in parts:
        if ":" in p:
            out.append(parse_range(p))
        else:
            try:
                x = float(p)
            except ValueError:
                raise UsageError(f"bad cell entry {p!r}") from None
            out.append(int(x) if x.is_integer() else x)
    return out


def _vocab() -> Vocabulary:
    try:
        return Vocabulary.default()
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot load vocabulary: {exc}") from exc


def sha256(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out: str, args: argparse.Namespace, outputs: list[str], started: float) -> None:
    flags = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = {
        "command": args.command,
        "flags": flags,
        "seed": flags.get("seed"),
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - started, 3),
        "outputs": {Path(p).name: sha256(p) for p in outputs},
    }
    Path(out + ".manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read_examples(path: str):
    if not Path(path).exists():
        raise DataError(f"no such file: {path}")
    return read_jsonl(path)


# --------------------------------------------------------------- commands


def cmd_generate(args) -> int:
    started = time.perf_counter()
    spec = StratifiedSpec(
        depths=parse_depths(args.depths),
        per_depth=args.per_depth,
        sampler=SAMPLERS[args.sampler],
        workers=args.workers,
        chunk_size=args.chunk_size,
        balance_labels=args.balance_labels,
        acceptance_floor=args.acceptance_floor,
    )
    config = SamplerConfig(
        permissive_facts=args.permissive_facts,
        lp_star_multiplicity=args.lp_star_multiplicity,
        seed=args.seed,
    )
    ds = generate_stratified(spec, config)
    write_jsonl(args.out, ds)
    meta_path = args.out + ".meta.json"
    Path(meta_path).write_text(json.dumps(ds.metadata, indent=2, sort_keys=True) + "\n")
    write_manifest(args.out, args, [args.out], started)
    print(f"wrote {len(ds)} examples to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_solve(args) -> int:
    if args.input.endswith((".jsonl", ".jsonl.gz")):
        examples = [e for e in iter_jsonl(args.input)]
        results = [label_and_depth(e.theory, e.query, args.cap) for e in examples]
    else:
        text = Path(args.input).read_text(encoding="utf-8")
        parsed = tc.parse_corpus(text, args.profile, _vocab())
        results = [label_and_depth(p.example.theory, p.example.query, args.cap) for p in parsed]
    _emit("".join(f"{label} {depth}\n" for label, depth in results), args.out)
    return EXIT_OK


def cmd_stats(args) -> int:
    rows = [feat.Profile.of(e) for e in iter_jsonl(args.input)]
    buf = io.StringIO()
    if args.joint:
        names = [n.strip() for n in args.joint.split(",")]
        if not args.cell:
            raise UsageError("--joint needs --cell")
        specs = [feat.FeatureSpec(n, args.bin_width) for n in names]
        res = feat.joint_conditional(rows, specs, parse_cell(args.cell, len(specs)), args.min_support)
        w = csv.writer(buf)
        w.writerow(["features", "cell", "positives", "support", "conditional_prob", "low_confidence"])
        prob = "" if res.probability is None else f"{res.probability:.6f}"
        w.writerow([args.joint, args.cell, res.positives, res.support, prob, res.low_confidence])
    else:
        names = args.feature or ["rule_count"]
        cols = ["feature", "bin_low", "bin_high", "positives", "negatives", "conditional_prob", "marginal_prob"]
        w = csv.DictWriter(buf, fieldnames=cols)
        w.writeheader()
        for name in names:
            hist = feat.conditional_label_histogram(rows, feat.feature(name, args.bin_width))
            for row in hist.rows():
                row = dict(row)
                for k in ("conditional_prob", "marginal_prob"):
                    row[k] = "" if row[k] is None else f"{row[k]:.6f}"
                w.writerow(row)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_balance(args) -> int:
    started = time.perf_counter()
    pool = _read_examples(args.input)
    reference = _read_examples(args.reference) if args.reference else pool
    spec = feat.feature(args.feature, args.bin_width)
    lo_hi = parse_range(args.range)
    brange = [lo_hi] * len(spec.parts) if isinstance(spec, feat.JointFeature) else lo_hi
    ref_hist = feat.conditional_label_histogram(reference, spec)
    target = args.target_size if args.target_size is not None else len(reference)
    k = bal.estimate_oversample_ratio(ref_hist, brange)
    if args.k_budget is not None:
        bal.check_budget(k, args.k_budget)
    plan = bal.make_plan(ref_hist, brange, target)
    out = bal.balance_downsample(pool, plan, random.Random(args.seed))
    report = bal.criteria_report(list(out), plan)
    report["oversample_ratio"] = k
    write_jsonl(args.out, out)
    report_path = args.report or args.out + ".report.json"
    Path(report_path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    write_manifest(args.out, args, [args.out, report_path], started)
    print(f"kept {len(out)} of {len(pool)}; balance_ok={report['balance_ok']} "
          f"tv={report['tv_distance']:.4f} k={k:.2f}", file=sys.stderr)
    return EXIT_OK


def cmd_render(args) -> int:
    vocab = _vocab()
    blocks = []
    for e in iter_jsonl(args.input):
        if args.model_input:
            blocks.append(tc.render_model_input(e, args.profile, vocab))
        else:
            blocks.append(tc.render_example(e, args.profile, vocab, with_answer=args.with_answer))
    sep = "\n" if args.model_input else "\n\n"
    _emit(sep.join(blocks) + ("\n" if blocks else ""), args.out)
    return EXIT_OK


def cmd_parse(args) -> int:
    text = Path(args.input).read_text(encoding="utf-8")
    parsed = tc.parse_corpus(text, args.profile, _vocab(), sampler=SAMPLERS[args.sampler])
    examples = [p.example for p in parsed]
    if args.out:
        write_jsonl(args.out, examples)
    else:
        for e in examples:
            sys.stdout.write(json.dumps(e.to_json(), separators=(",", ":")) + "\n")
    return EXIT_OK


def _model(args):
    config = simnet.ConstructedModelConfig(layers=args.layers, beta=args.beta)
    return config, simnet.generate_signatures(args.seed)


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    config, sigs = _model(args)
    params = simnet.build_params(config)
    lines = []
    for i, e in enumerate(iter_jsonl(args.input)):
        res = simnet.run_constructed_model(e, sigs, config, params)
        rec = {"index": i, "label": res.label, "query_value": res.query_value}
        if args.trace:
            rec["trace"] = [sorted(s) for s in res.trace]
        lines.append(json.dumps(rec, separators=(",", ":")) + "\n")
    _emit("".join(lines), args.out)
    if args.out:
        write_manifest(args.out, args, [args.out], started)
    return EXIT_OK


def cmd_verify(args) -> int:
    config, sigs = _model(args)
    examples = read_jsonl(args.input)
    try:
        report = simnet.verify_agreement(examples, sigs, config)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    _emit(json.dumps(report.to_json(), indent=2) + "\n", args.out)
    return EXIT_OK


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="simplelogic", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="depth-stratified dataset")
    g.add_argument("--sampler", choices=sorted(SAMPLERS), default="rp")
    g.add_argument("--per-depth", type=int, required=True)
    g.add_argument("--depths", default="0..6")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--chunk-size", type=int, default=2000)
    g.add_argument("--balance-labels", action="store_true")
    g.add_argument("--permissive-facts", action="store_true", help="allow theories with no facts")
    g.add_argument("--lp-star-multiplicity", type=int, default=3)
    g.add_argument("--acceptance-floor", type=float, default=1e-4)
    g.add_argument("--out", required=True, help="JSONL path (.gz compresses)")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="label and depth for each example")
    s.add_argument("input", help="JSONL file, or a text corpus of rendered examples")
    s.add_argument("--profile", choices=[x.value for x in tc.Profile], default=tc.Profile.APPENDIXD.value)
    s.add_argument("--cap", type=int, default=DEFAULT_CAP)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    st = sub.add_parser("stats", help="label-conditional histograms as CSV")
    st.add_argument("input")
    st.add_argument("--feature", action="append", help="repeatable; comma-join for a joint histogram")
    st.add_argument("--bin-width", type=float, default=0.1)
    st.add_argument("--joint", help="comma-separated features for a single cell query")
    st.add_argument("--cell", help="one entry per --joint feature; LO:HI for a range")
    st.add_argument("--min-support", type=int, default=feat.LOW_SUPPORT)
    st.add_argument("--out")
    st.set_defaults(func=cmd_stats)

    b = sub.add_parser("balance", help="label-balanced down-sampling")
    b.add_argument("input", help="JSONL pool")
    b.add_argument("--feature", default="rule_count")
    b.add_argument("--range", required=True, help="balanced value range LO:HI")
    b.add_argument("--target-size", type=int)
    b.add_argument("--reference", help="JSONL whose marginal is preserved (default: the pool)")
    b.add_argument("--bin-width", type=float, default=0.1)
    b.add_argument("--k-budget", type=float, help="fail with exit 3 if the oversample ratio exceeds this")
    b.add_argument("--seed", type=int, required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--report")
    b.set_defaults(func=cmd_balance)

    r = sub.add_parser("render", help="JSONL to text")
    r.add_argument("input")
    r.add_argument("--profile", choices=[x.value for x in tc.Profile], default=tc.Profile.APPENDIXD.value)
    r.add_argument("--with-answer", action="store_true")
    r.add_argument("--model-input", action="store_true", help="one [CLS] ... [SEP] line per example")
    r.add_argument("--out")
    r.set_defaults(func=cmd_render)

    pa = sub.add_parser("parse", help="text corpus to JSONL")
    pa.add_argument("input")
    pa.add_argument("--profile", choices=[x.value for x in tc.Profile], default=tc.Profile.APPENDIXD.value)
    pa.add_argument("--sampler", choices=sorted(SAMPLERS), default="uniform", help="tag when the text has no From line")
    pa.add_argument("--out")
    pa.set_defaults(func=cmd_parse)

    for name, fn, helptext in (
        ("simulate", cmd_simulate, "run the constructed transformer"),
        ("verify", cmd_verify, "agreement of the constructed transformer with stored labels"),
    ):
        m = sub.add_parser(name, help=helptext)
        m.add_argument("input")
        m.add_argument("--layers", type=int, default=12)
        m.add_argument("--beta", type=float, default=simnet.BETA_MIN + 1)
        m.add_argument("--seed", type=int, required=True, help="signature seed")
        m.add_argument("--out")
        if name == "simulate":
            m.add_argument("--trace", action="store_true")
        m.set_defaults(func=fn)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except bal.InfeasiblePlan as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DataError, tc.ParseError, AcceptanceFloorError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # constructor checks on flag values (negative sizes, bad beta, ...)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

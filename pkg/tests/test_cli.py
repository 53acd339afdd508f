import csv
import io
import json
import subprocess
import sys

import pytest

from simplelogic.cli import main, parse_cell, parse_depths, UsageError
from simplelogic.core import read_jsonl
from simplelogic.textcodec import parse_corpus

from .conftest import DATA


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen") / "rp.jsonl"
    assert main(["generate", "--sampler", "rp", "--per-depth", "100", "--depths", "0..6", "--seed", "1", "--out", str(out)]) == 0
    return out


def test_generate_outputs(small):
    assert len(small.read_text().splitlines()) == 700
    meta = json.loads(small.with_name("rp.jsonl.meta.json").read_text())
    assert set(meta["acceptance_rates"]) == {str(d) for d in range(7)}
    manifest = json.loads(small.with_name("rp.jsonl.manifest.json").read_text())
    assert manifest["seed"] == 1 and manifest["command"] == "generate"
    assert set(manifest["outputs"]) == {"rp.jsonl"}


def test_generate_is_reproducible(small, tmp_path):
    again = tmp_path / "rp.jsonl"
    main(["generate", "--sampler", "rp", "--per-depth", "100", "--depths", "0..6", "--seed", "1", "--out", str(again)])
    assert again.read_bytes() == small.read_bytes()


def test_seed_is_mandatory(tmp_path, capsys):
    assert main(["generate", "--per-depth", "5", "--out", str(tmp_path / "x.jsonl")]) == 1
    assert "--seed" in capsys.readouterr().err


def test_floor_breach_is_a_data_error(tmp_path):
    argv = ["generate", "--per-depth", "5000", "--depths", "11", "--seed", "0", "--acceptance-floor", "0.5",
            "--chunk-size", "100000", "--out", str(tmp_path / "x.jsonl")]
    assert main(argv) == 2


def test_solve_reference_corpus(capsys):
    assert main(["solve", str(DATA / "reference_examples.txt")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1] == "True 6"


def test_solve_jsonl(small, capsys):
    assert main(["solve", str(small)]) == 0
    got = capsys.readouterr().out.splitlines()
    exs = read_jsonl(small)
    assert got == [f"{e.label} {e.depth}" for e in exs]


def test_stats_rule_count(small, capsys):
    assert main(["stats", str(small), "--feature", "rule_count"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    observed = {len(e.theory.rules) for e in read_jsonl(small)}
    assert {int(float(r["bin_low"])) for r in rows} == observed
    assert sum(int(r["positives"]) + int(r["negatives"]) for r in rows) == 700


def test_stats_branching_factor_bin(small, capsys):
    assert main(["stats", str(small), "--feature", "branching_factor", "--bin-width", "0.1"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert ("2.65", "2.75") in {(r["bin_low"], r["bin_high"]) for r in rows}


def test_stats_joint_cell(small, capsys):
    argv = ["stats", str(small), "--joint", "fact_count,branching_factor,rule_count", "--cell", "15,2.65:2.75,58"]
    assert main(argv) == 0
    (row,) = csv.DictReader(io.StringIO(capsys.readouterr().out))
    assert row["low_confidence"] == "True" and int(row["support"]) >= 0


def test_render_parse_round_trip(small, tmp_path):
    text = tmp_path / "rp.txt"
    back = tmp_path / "back.jsonl"
    assert main(["render", str(small), "--with-answer", "--out", str(text)]) == 0
    assert main(["parse", str(text), "--out", str(back)]) == 0
    assert back.read_bytes() == small.read_bytes()


def test_parse_error_has_position(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("Facts: Alice shiny.\n\nQuery: Alice is zorply ?\n")
    assert main(["parse", str(bad)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_verify_and_simulate(small, tmp_path, capsys):
    assert main(["verify", str(small), "--seed", "0"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["accuracy"] == 1.0 and report["total"] == 700
    out = tmp_path / "sim.jsonl"
    assert main(["simulate", str(small), "--seed", "0", "--trace", "--out", str(out)]) == 0
    recs = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(recs) == 700 and len(recs[0]["trace"]) == 12


def test_verify_rejects_too_deep(small, capsys):
    assert main(["verify", str(small), "--seed", "0", "--layers", "5"]) == 2
    assert "deeper than 3" in capsys.readouterr().err


def test_bad_beta_is_usage_error(small):
    assert main(["verify", str(small), "--seed", "0", "--beta", "10"]) == 1


def test_balance_round(small, tmp_path):
    pool = tmp_path / "pool.jsonl"
    main(["generate", "--per-depth", "400", "--depths", "0..3", "--seed", "2", "--out", str(pool)])
    out = tmp_path / "bal.jsonl"
    rc = main(["balance", str(pool), "--range", "5:30", "--target-size", "100", "--seed", "3", "--out", str(out)])
    assert rc == 0
    report = json.loads((tmp_path / "bal.jsonl.report.json").read_text())
    assert report["size"] == 100 and report["balance_ok"]
    assert "bal.jsonl.report.json" in json.loads((tmp_path / "bal.jsonl.manifest.json").read_text())["outputs"]


def test_balance_budget_exit_code(small, tmp_path):
    rc = main(["balance", str(small), "--range", "5:60", "--k-budget", "1.0", "--seed", "0", "--out", str(tmp_path / "b.jsonl")])
    assert rc == 3


def test_vocab_env(small, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SIMPLELOGIC_VOCAB", str(tmp_path / "missing.txt"))
    assert main(["render", str(small)]) == 2


def test_flag_parsers():
    assert parse_depths("0..3") == (0, 1, 2, 3)
    assert parse_depths("1,4") == (1, 4)
    assert parse_cell("15,2.65:2.75,58", 3) == [15, (2.65, 2.75), 58]
    with pytest.raises(UsageError):
        parse_depths("a..b")
    with pytest.raises(UsageError):
        parse_cell("1,2", 3)


def test_console_script_runs():
    out = subprocess.run([sys.executable, "-m", "simplelogic.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()

import csv
import json
from pathlib import Path

import pytest

from seqtree import cli, experiment
from seqtree.experiment import (
    AGGREGATE_HEADER, HALSTEAD_HEADER, RESULT_HEADER, ConfigError, load_config,
)
from seqtree.seqdata import load_csv

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = Path(__file__).parent / "fixtures"


def small_config(tmp_path, **over):
    cfg = {
        "dataset": {"synth": {"n": 300, "seq_len": 30, "motif": "TATA"}},
        "mode": "deft", "depths": [1, 2], "seeds": [0, 1],
        "generation": {"population_size": 2, "n_reflections": 1},
        "backend": {"kind": "scripted", "fixture": str(ROOT / "configs" / "tata_fixture.json")},
        "output_dir": str(tmp_path / "out"),
    }
    cfg.update(over)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return p


def header(path):
    with open(path, newline="") as fh:
        return next(csv.reader(fh))


def test_synth_balanced(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert cli.main(["synth", "--motif", "TATA", "--n", "6000", "--len", "101", "--out", str(out)]) == 0
    ds = load_csv(out)
    assert len(ds) == 6000 and sum(ds.labels) == 3000 and ds.seq_len == 101
    assert all(("TATA" in s) == bool(y) for s, y in zip(ds.sequences, ds.labels))
    assert header(out) == ["raw_sequence", "label"]


def test_inspect_sample_tree(capsys):
    assert cli.main(["inspect", str(FIXTURES / "sample_tree.json")]) == 0
    text = capsys.readouterr().out
    assert "7 internal nodes, 8 leaves" in text and text.count("leaf p1=") == 8


def test_halstead_command(capsys):
    assert cli.main(["halstead", str(FIXTURES / "sample_tree.json")]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[0].split() == ["node", "volume", "difficulty", "effort", "expr"]
    assert len(lines) == 1 + 7 + 2
    assert lines[-2].startswith("median (generated): volume ")
    assert lines[-1].startswith("median (all): volume ")


def test_train_predict_eval_round_trip(tmp_path, capsys):
    cfg = small_config(tmp_path)
    assert cli.main(["train", "--config", str(cfg)]) == 0
    out = tmp_path / "out"
    for name in ("config.resolved.json", "results.csv", "aggregate.csv", "halstead_summary.csv",
                 "data/seed1_test.csv", "runs/seed1_depth2/tree.json",
                 "runs/seed1_depth2/transcript.jsonl", "runs/seed0_depth1/halstead.csv"):
        assert (out / name).exists(), name
    assert header(out / "results.csv") == list(RESULT_HEADER)
    assert header(out / "aggregate.csv") == list(AGGREGATE_HEADER)
    assert header(out / "runs/seed0_depth1/halstead.csv") == HALSTEAD_HEADER
    assert header(out / "halstead_summary.csv") == ["statistic", "volume", "effort", "difficulty"]

    run = out / "runs" / "seed1_depth2"
    pred = tmp_path / "pred.csv"
    assert cli.main(["predict", "--tree", str(run / "tree.json"),
                     "--data", str(out / "data/seed1_test.csv"), "--out", str(pred)]) == 0
    assert header(pred) == ["index", "p1", "label"]
    mj = tmp_path / "m.json"
    assert cli.main(["eval", "--predictions", str(pred), "--data", str(out / "data/seed1_test.csv"),
                     "--out", str(mj)]) == 0
    assert json.loads(mj.read_text()) == json.loads((run / "metrics.json").read_text())["test"]
    assert "accuracy  " in capsys.readouterr().out


def test_cart_never_builds_backend(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise AssertionError("backend constructed for a baseline run")
    monkeypatch.setattr(experiment, "make_backend", boom)
    monkeypatch.setattr(experiment, "ChatClient", boom)
    cfg = small_config(tmp_path, mode="cart_onehot", backend=None, generation={})
    assert cli.main(["train", "--config", str(cfg)]) == 0
    assert not list((tmp_path / "out" / "runs").glob("*/transcript.jsonl"))


def test_bad_config_reports_field_paths(tmp_path, capsys):
    cfg = small_config(tmp_path, bogus=1)
    data = json.loads(cfg.read_text())
    data["dataset"]["synth"]["n"] = -5
    cfg.write_text(json.dumps(data))
    assert cli.main(["train", "--config", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("invalid config:")
    assert "dataset.synth.n" in err and "bogus" in err


def test_config_rules():
    base = {"dataset": {"synth": {}}, "mode": "cart_onehot"}
    load_config(base)
    for bad in ({**base, "mode": "deft"},
                {**base, "dataset": {}},
                {**base, "dataset": {"synth": {}, "csv": "x.csv"}},
                {**base, "backend": {"kind": "scripted"}}):
        with pytest.raises(ConfigError):
            load_config(bad)


def test_yaml_config_resolves_relative_paths():
    cfg = load_config(ROOT / "configs" / "tata_deft.yaml")
    assert Path(cfg.backend.fixture).is_absolute() and Path(cfg.backend.fixture).exists()
    assert cfg.generation.population_size == 3


def test_missing_files_exit_1(tmp_path, capsys):
    assert cli.main(["inspect", str(tmp_path / "nope.json")]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("raw_sequence,label\nACGU,1\n")
    assert cli.main(["predict", "--tree", str(FIXTURES / "sample_tree.json"), "--data", str(bad),
                     "--out", str(tmp_path / "p.csv")]) == 1

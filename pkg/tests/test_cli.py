import json

import pytest

from blamelab.cli import main

GEN = ["gen", "--programs", "60", "--seed", "7"]
SMALL_MODEL = ["--preset", "tiny", "--layers", "1", "--hidden", "16", "--heads", "2", "--epochs", "2", "--lr", "3e-3"]


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    assert run(*GEN, "--out", out) == 0
    return out / "corpus.jsonl"


@pytest.fixture(scope="module")
def checkpoint(tmp_path_factory, corpus):
    out = tmp_path_factory.mktemp("ft")
    assert run("finetune", "--corpus", corpus, "--out", out, *SMALL_MODEL) == 0
    return out / "checkpoint"


def test_gen_is_deterministic(tmp_path, corpus):
    assert run(*GEN, "--out", tmp_path) == 0
    assert (tmp_path / "corpus.jsonl").read_bytes() == corpus.read_bytes()
    assert len(corpus.read_text().splitlines()) == 60
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["num_programs"] == 60
    assert json.loads((tmp_path / "runconfig.json").read_text())["seed"] == 7


def test_gen_cross_family_and_multi(tmp_path):
    assert run("gen", "--programs", "60", "--split-mode", "cross-family", "--multi", "--out", tmp_path) == 0
    rows = [json.loads(line) for line in (tmp_path / "corpus.jsonl").read_text().splitlines()]
    train = {r["family"] for r in rows if r["split"] == "train"}
    test = {r["family"] for r in rows if r["split"] == "test"}
    assert train and test and not train & test
    assert any("+" in r["mutation"]["op"] for r in rows)


def test_seed_from_environment(tmp_path, monkeypatch, corpus):
    monkeypatch.setenv("BLAMELAB_SEED", "7")
    assert run("gen", "--programs", "60", "--out", tmp_path) == 0
    assert (tmp_path / "corpus.jsonl").read_bytes() == corpus.read_bytes()
    monkeypatch.setenv("BLAMELAB_SEED", "seven")
    assert run("gen", "--programs", "5", "--out", tmp_path) == 2


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"programs": 12, "seed": 3, "split-mode": "cross-family"}))
    assert run("gen", "--config", cfg, "--out", tmp_path / "a") == 0
    assert len((tmp_path / "a" / "corpus.jsonl").read_text().splitlines()) == 12
    assert run("gen", "--config", cfg, "--programs", "5", "--out", tmp_path / "b") == 0
    resolved = json.loads((tmp_path / "b" / "runconfig.json").read_text())
    assert resolved["programs"] == 5 and resolved["seed"] == 3 and resolved["split_mode"] == "cross-family"


def test_exit_codes(tmp_path, capsys):
    assert run("gen") == 2  # missing --out
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"]
    assert run("nonsense") == 2
    assert run("eval", "--corpus", tmp_path / "missing.jsonl", "--seeds", "1", "--out", tmp_path) == 3
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{oops\n")
    assert run("baseline", "--corpus", bad, "--out", tmp_path) == 4
    assert "line 1" in json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"]


def test_baseline_compiler(tmp_path, corpus):
    assert run("baseline", "--kind", "compiler", "--corpus", corpus, "--out", tmp_path) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["model"] == "compiler" and 0.0 <= report["mean_iou"] <= 1.0
    assert set(report) >= {"model", "corpus", "threshold", "mean_iou", "top3_rate", "per_program"}


def test_finetune_eval_sweep_probe(tmp_path, corpus, checkpoint):
    assert (checkpoint / "manifest.json").exists()
    assert run("finetune", "--corpus", corpus, "--init", checkpoint, "--epochs", "1", "--out", tmp_path / "ft2") == 0
    assert (tmp_path / "ft2" / "checkpoint" / "weights.bin").exists()
    log = [json.loads(line) for line in (tmp_path / "ft2" / "train_log.jsonl").read_text().splitlines()]
    assert set(log[0]) == {"epoch", "split", "loss", "seconds"}

    assert run("eval", "--corpus", corpus, "--checkpoint", checkpoint, "--out", tmp_path / "ev") == 0
    single = json.loads((tmp_path / "ev" / "report.json").read_text())
    assert 0.0 <= single["mean_iou"] <= 1.0

    assert run("sweep", "--corpus", corpus, "--checkpoint", checkpoint, "--out", tmp_path / "sw") == 0
    sweep = json.loads((tmp_path / "sw" / "sweep.json").read_text())
    assert [r["threshold"] for r in sweep["rows"]] == [0.3, 0.4, 0.5, 0.6, 0.7]

    assert run("probe", "--corpus", corpus, "--checkpoint", checkpoint, "--rank", "4", "--epochs", "2",
               "--max-test", "5", "--out", tmp_path / "pr") == 0
    probe = json.loads((tmp_path / "pr" / "probe_report.json").read_text())
    assert set(probe) >= {"model", "control", "layer", "rank", "mean_uuas", "control_mean_uuas", "mean_loss", "samples"}


def test_eval_seeds_aggregates(tmp_path, corpus):
    assert run("eval", "--corpus", corpus, "--seeds", "2", *SMALL_MODEL, "--out", tmp_path) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    ious = [r["mean_iou"] for r in report["runs"]]
    assert [r["run"] for r in report["runs"]] == ["seed0", "seed1"]
    assert report["mean_iou"] == pytest.approx(sum(ious) / 2)
    assert "mean_iou_sd" in report


def test_pretrain(tmp_path):
    assert run("pretrain", "--sources", "20", *SMALL_MODEL, "--out", tmp_path) == 0
    assert (tmp_path / "checkpoint" / "weights.bin").exists()


def _report(path, model, iou):
    path.write_text(json.dumps({"model": model, "mean_iou": iou, "top3_rate": 0.5}))
    return path


def test_report_sorts_descending(tmp_path, capsys):
    a = _report(tmp_path / "a.json", "low", 0.2)
    b = _report(tmp_path / "b.json", "high", 0.7)
    assert run("report", a, b, "--out", tmp_path / "cmp") == 0
    rows = json.loads((tmp_path / "cmp" / "comparison.json").read_text())["rows"]
    assert [r["model"] for r in rows] == ["high", "low"]
    text = capsys.readouterr().out.splitlines()
    assert text[1].startswith("high") and text[2].startswith("low")
    assert run("report", a, a) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1] == lines[2]


def test_report_format_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nothing": 1}))
    assert run("report", bad) == 4


def test_inputs_not_mutated(tmp_path, corpus):
    before = corpus.read_bytes()
    assert run("baseline", "--corpus", corpus, "--out", tmp_path) == 0
    assert corpus.read_bytes() == before

import json
import subprocess
import sys

import pytest

from hyro import cli


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_verify_passes():
    assert run("verify") == 0


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--curvature", "0"],
        ["verify", "--curvature", "-1"],
        ["verify", "--dim", "10", "--block", "3"],
        ["gradcheck", "--trials", "0"],
        ["bench", "--repeats", "0"],
        ["train", "--steps", "-1"],
        ["train", "--noise", "-0.5"],
        ["export", "--dim", "8", "--block", "4", "--scale-block", "3"],
        ["frobnicate"],
        ["verify", "--dim", "eight"],
    ],
)
def test_bad_input_exits_one(argv):
    assert run(*argv) == 1


def test_gradcheck_report(tmp_path):
    report = tmp_path / "grad.json"
    assert run("gradcheck", "--trials", "20", "--report", report) == 0
    doc = json.loads(report.read_text())
    assert doc["passed"] and doc["near_boundary_finite"]
    ops = {r["op"] for r in doc["reports"]}
    assert {"cayley", "scale", "exp", "log", "hyro", "ce"} <= ops
    assert all(r["trials"] >= 20 for r in doc["reports"])


def test_gradcheck_impossible_tolerance_fails():
    assert run("gradcheck", "--trials", "2", "--tolerance", "1e-30") == 2


def test_train_zero_steps(tmp_path, capsys):
    log = tmp_path / "log.csv"
    assert run("train", "--steps", "0", "--log-csv", log) == 0
    lines = log.read_text().splitlines()
    assert lines[0] == "step,loss,accuracy,mean_angle,radius_drift"
    assert len(lines) == 2 and lines[1].startswith("0,")


def test_train_outputs_are_reproducible(tmp_path):
    outs = []
    for tag in "ab":
        files = [tmp_path / f"{tag}.csv", tmp_path / f"{tag}.json", tmp_path / f"{tag}_p.json"]
        assert run("train", "--steps", "30", "--log-csv", files[0], "--log-json", files[1], "--params-out", files[2]) == 0
        outs.append([f.read_bytes() for f in files])
    assert outs[0] == outs[1]


def test_train_divergence_exit_code(monkeypatch, tmp_path, capsys):
    def blow_up(*args, **kwargs):
        raise cli.DivergenceError("non-finite loss at step 1", log=None)

    monkeypatch.setattr(cli.toy, "train", blow_up)
    assert run("train", "--steps", "5") == 3
    assert "diverged" in capsys.readouterr().err


def test_ablate_alias(capsys):
    assert run("train", "--ablate", "--steps", "3") == 0
    first = capsys.readouterr().out
    assert run("ablate", "--steps", "3") == 0
    assert capsys.readouterr().out == first
    assert first.splitlines()[0].split() == ["radius", "rotation", "accuracy"]
    assert len(first.splitlines()) == 5


def test_bench_small(capsys):
    assert run("bench", "--dims", "64", "--blocks", "16", "64", "--repeats", "2") == 0
    assert "64" in capsys.readouterr().out


def test_export_import_probe_bit_identical(tmp_path):
    params, probe_a, probe_b = tmp_path / "p.json", tmp_path / "a.json", tmp_path / "b.json"
    assert run("export", "--random", "--dim", "16", "--block", "4", "--scale-block", "8",
               "--out", params, "--probe-out", probe_a) == 0
    assert run("import", params, "--probe-out", probe_b) == 0
    assert probe_a.read_bytes() == probe_b.read_bytes()
    assert json.loads(probe_a.read_text())["outputs"] != []


def test_import_rejects_malformed(tmp_path):
    params = tmp_path / "p.json"
    assert run("export", "--random", "--out", params) == 0
    text = params.read_text()
    truncated = tmp_path / "t.json"
    truncated.write_text(text[: len(text) // 2])
    assert run("import", truncated) != 0
    doc = json.loads(text)
    doc["format_version"] = 2
    future = tmp_path / "v2.json"
    future.write_text(json.dumps(doc))
    assert run("import", future) != 0
    assert run("import", tmp_path / "missing.json") != 0


def test_config_file_and_flag_precedence(tmp_path, monkeypatch):
    seen = {}

    def spy(cfg, steps, **kwargs):
        seen.update(dim=cfg.dim, block=cfg.block, lr=cfg.lr, steps=steps)
        return real(cfg, 0, **kwargs)

    real = cli.toy.train
    monkeypatch.setattr(cli.toy, "train", spy)
    config = tmp_path / "c.json"
    config.write_text(json.dumps({"dim": 16, "block": 4, "scale_block": 4, "lr": 0.01, "steps": 7}))
    assert run("train", "--config", config, "--lr", "0.5") == 0
    assert seen == {"dim": 16, "block": 4, "lr": 0.5, "steps": 7}


def test_config_unknown_key(tmp_path):
    config = tmp_path / "c.json"
    config.write_text(json.dumps({"nonsense": 1}))
    assert run("verify", "--config", config) == 1


def test_help_shows_defaults():
    out = subprocess.run(
        [sys.executable, "-m", "hyro", "train", "--help"], capture_output=True, text=True, check=True
    ).stdout
    assert "default: 2000" in out and "default: 0.0002" in out and "default: 0.07" in out

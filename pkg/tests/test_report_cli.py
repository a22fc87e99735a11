import json
import subprocess
import sys

import pytest

from sensorprint.cli import main
from sensorprint.report import csv_report, emit_report, text_report

ENTROPY_CFG = {"experiment": "accel-entropy", "devices": 40,
               "population": {"noise": {"accel_sigma": 0.05}, "user_agents": 5},
               "accel": {"detection": {"magnitude_tol": 2.0, "variance_tol": 0.15}}}


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(ENTROPY_CFG))
    return path


def _run(*argv):
    return main([str(a) for a in argv])


def test_text_report_formats():
    res = {"experiment": "accel-entropy", "seed": 1,
           "metrics": {"entropy_bits": 8.14159, "rate_fused": 0.8},
           "tables": {"recognition": {"columns": ["protocol", "rate"], "rows": [["fused", 0.8]]}}}
    text = text_report(res)
    assert "  entropy_bits: 8.142 bits\n" in text
    assert "  rate_fused: 0.8000\n" in text
    assert csv_report(res) == "protocol,rate\nfused,0.8\n"
    with pytest.raises(ValueError):
        emit_report(res, "xml")


def test_pipeline_and_exit_codes(tmp_path, cfg_path, capsys):
    pop, ds, res = tmp_path / "pop.jsonl", tmp_path / "ds.jsonl", tmp_path / "res.json"
    assert _run("simulate", "--config", cfg_path, "--seed", 3, "--out", pop) == 0
    assert _run("accel-fp", "--config", cfg_path, "--dataset", pop, "--out", ds) == 0
    assert _run("entropy", "--config", cfg_path, "--dataset", ds, "--result", res) == 0
    out = capsys.readouterr().out
    assert "entropy_bits:" in out and " bits" in out
    assert _run("report", "--result", res, "--format", "csv") == 0
    assert capsys.readouterr().out.startswith("protocol,correct,total,filtered_out,rate\n")

    assert _run("entropy", "--config", cfg_path, "--dataset", tmp_path / "missing.jsonl") == 2
    assert _run("audio-fp", "--config", cfg_path, "--dataset", pop) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"devices": 3, "bogus": 1}))
    assert _run("simulate", "--config", bad) == 1
    assert _run("simulate", "--seed", "-4") == 1
    assert _run("report", "--result", ds) == 1
    assert _run("frobnicate") == 1


def test_seed_precedence(tmp_path, cfg_path, monkeypatch):
    outs = {}
    for name, env, flag in [("env", "7", None), ("flag", "99", 7), ("other", "8", None)]:
        monkeypatch.setenv("SENSORPRINT_SEED", env)
        out = tmp_path / f"{name}.jsonl"
        argv = ["simulate", "--config", cfg_path, "--out", out]
        if flag is not None:
            argv += ["--seed", flag]
        assert _run(*argv) == 0
        outs[name] = out.read_bytes()
    assert outs["env"] == outs["flag"] != outs["other"]
    monkeypatch.setenv("SENSORPRINT_SEED", "abc")
    assert _run("simulate", "--config", cfg_path) == 1


def test_cli_outputs_byte_identical(tmp_path, cfg_path):
    def once(tag):
        subprocess.run([sys.executable, "-m", "sensorprint.cli", "run", "--config", str(cfg_path),
                        "--seed", "5", "--format", "csv", "--out", str(tmp_path / f"{tag}.csv"),
                        "--result", str(tmp_path / f"{tag}.json")], check=True)
        return (tmp_path / f"{tag}.csv").read_bytes(), (tmp_path / f"{tag}.json").read_bytes()
    assert once("a") == once("b")

import csv
import json
import math

import pytest

from clockspec import cli, stats
from clockspec.errors import NumericError

SMALL_EXP = {"n_values": [100, 200], "realizations": 4, "bootstrap": 10, "c_max": 8.0,
             "N": 300, "m": 20, "blocks": [3, 5], "c_range": 2.0, "c_step": 0.5}


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def only(tmp_path, pattern):
    hits = sorted(tmp_path.glob(pattern))
    assert len(hits) == 1, hits
    return hits[0]


def test_clock_free_field(tmp_path):
    cfg = write(tmp_path, {"model": {"alpha": 0.75, "amplitudes": {"kind": "zero"}}, "experiment": SMALL_EXP})
    assert cli.run(["clock", "--config", str(cfg), "--out", str(tmp_path), "--quiet"]) == 0
    rows = list(csv.DictReader(only(tmp_path, "clock_*.csv").open()))
    assert rows and all(abs(float(r["gap"]) - math.pi) < 1e-9 for r in rows)


def test_corr_markov(tmp_path):
    cfg = write(tmp_path, {"model": {"alpha": 0.75, "amplitudes": {"kind": "markov", "stay": 0.8}},
                           "experiment": {"realizations": 100, "N": 2000, "max_lag": 30}})
    assert cli.run(["corr", "--config", str(cfg), "--out", str(tmp_path), "--quiet"]) == 0
    assert only(tmp_path, "corr_*.csv").read_text().startswith("lag,corr,stderr\n")
    doc = json.loads(only(tmp_path, "corr_*.json").read_text())
    assert doc["summary"]["fit"]["rate"] == pytest.approx(-math.log(0.6), rel=0.1)


def test_holder_exit_code_follows_gate(tmp_path):
    exp = dict(SMALL_EXP, realizations=20)
    easy = write(tmp_path, {"model": {"alpha": 0.75}, "experiment": dict(exp, gates={"holder_slope_min": 0.0, "holder_stderr_max": 10.0})}, "a.json")
    hard = write(tmp_path, {"model": {"alpha": 0.75}, "experiment": dict(exp, gates={"holder_slope_min": 5.0})}, "b.json")
    assert cli.run(["holder", "--config", str(easy), "--out", str(tmp_path / "a"), "--quiet"]) == 0
    assert cli.run(["holder", "--config", str(hard), "--out", str(tmp_path / "b"), "--quiet"]) == 1
    doc = json.loads(only(tmp_path / "b", "holder_*.json").read_text())
    assert doc["summary"]["slope"] is not None and doc["summary"]["slope_stderr"] is not None


def test_config_errors_exit_2(tmp_path, capsys):
    bad = write(tmp_path, {"model": {"alpha": 0.75}, "experiment": {"typo": 1}})
    assert cli.run(["clock", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert cli.run(["clock", "--config", str(tmp_path / "missing.json")]) == 2
    assert cli.run(["nonsense"]) == 2
    assert cli.run(["clock", "--frobnicate"]) == 2
    assert cli.run([]) == 2
    assert "usage" in capsys.readouterr().err
    low = write(tmp_path, {"model": {"alpha": 0.4}}, "low.json")
    assert cli.run(["clock", "--config", str(low), "--out", str(tmp_path)]) == 2


def test_numeric_error_exit_3(tmp_path, monkeypatch):
    def boom(cfg, workers=None):
        raise NumericError("diverged")
    monkeypatch.setitem(cli.EXPERIMENTS, "clock", boom)
    assert cli.run(["clock", "--out", str(tmp_path)]) == 3


def test_env_out_and_seed_override(tmp_path, monkeypatch):
    cfg = write(tmp_path, {"model": {"alpha": 0.75}, "experiment": SMALL_EXP, "run": {"seed": 1}})
    monkeypatch.setenv("CLOCKSPEC_OUT", str(tmp_path / "env"))
    cli.run(["moments", "--config", str(cfg), "--seed", "99", "--quiet"])
    doc = json.loads(only(tmp_path / "env", "moments_*.json").read_text())
    assert doc["provenance"]["seed"] == 99
    effective = stats.config_from_dict({"model": {"alpha": 0.75}, "experiment": SMALL_EXP, "run": {"seed": 99}})
    assert doc["config"] == effective.to_dict()


def test_worker_count_does_not_change_output(tmp_path):
    cfg = write(tmp_path, {"model": {"alpha": 0.75}, "experiment": SMALL_EXP})
    cli.run(["theta", "--config", str(cfg), "--out", str(tmp_path / "1"), "--workers", "1", "--quiet"])
    cli.run(["theta", "--config", str(cfg), "--out", str(tmp_path / "3"), "--workers", "3", "--quiet"])
    for ext in ("json", "csv"):
        a, b = only(tmp_path / "1", f"theta_*.{ext}"), only(tmp_path / "3", f"theta_*.{ext}")
        assert a.name == b.name and a.read_bytes() == b.read_bytes()


def test_debug_dumps(tmp_path):
    cfg = write(tmp_path, {"model": {"alpha": 0.75}, "experiment": SMALL_EXP})
    assert cli.run(["spectrum", "--config", str(cfg), "--out", str(tmp_path), "--quiet"]) == 0
    assert cli.run(["phase-dump", "--config", str(cfg), "--out", str(tmp_path), "--quiet"]) == 0
    assert only(tmp_path, "spectrum_*_n100.csv").read_text().startswith("k,kappa_k,atom\n")
    assert only(tmp_path, "phase_*_n200.csv").read_text().startswith("t,theta,log_r,ReJ,ImJ,ReR,ImR\n")
    assert only(tmp_path, "theta_*_n200.csv").read_text().startswith("c,Theta\n")


def test_summary_printed(tmp_path, capsys):
    cfg = write(tmp_path, {"model": {"alpha": 0.75}, "experiment": SMALL_EXP})
    cli.run(["moments", "--config", str(cfg), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert "moments.decay_rate_min" in out and "wrote" in out

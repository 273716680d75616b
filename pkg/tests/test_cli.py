import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from privopt.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def fields(text):
    return dict(line.split(": ", 1) for line in text.strip().splitlines())


def test_noise_sample_prints_one_vector_per_line(capsys):
    code, out, _ = run(capsys, "noise", "sample", "--kind", "gamma", "--d", "3", "--eps", "1", "--count", "4", "--seed", "1")
    assert code == 0
    rows = np.array([[float(v) for v in line.split(",")] for line in out.splitlines()])
    assert rows.shape == (4, 3)
    again = run(capsys, "noise", "sample", "--kind", "gamma", "--d", "3", "--eps", "1", "--count", "4", "--seed", "1")[1]
    assert again == out


def test_noise_sample_gauss_needs_delta(capsys):
    assert run(capsys, "noise", "sample", "--kind", "gauss", "--d", "3", "--eps", "1")[0] == 2
    code, out, _ = run(capsys, "noise", "sample", "--kind", "gauss", "--d", "2", "--eps", "1", "--delta", "0.1")
    assert code == 0 and len(out.split(",")) == 2


def test_bound_reports_parameters(capsys):
    code, out, _ = run(capsys, "bound", "--class", "f", "--L", "1", "--mu", "1", "--R", "1", "--d", "2", "--eps", "4", "--erm", "false")
    assert code == 0
    info = fields(out)
    assert float(info["sensitivity"]) == 2.0
    assert float(info["alpha"]) == 0.5
    assert float(info["bound_implementation"]) == 1.0  # 9 (L^2/mu)(d/eps) = 4.5 capped at L R


def test_bound_regime_error_and_force(capsys):
    argv = ["bound", "--class", "h", "--L", "1", "--mu", "1", "--beta", "2", "--R", "1", "--d", "5", "--n", "200", "--eps", "0.01"]
    code, _, err = run(capsys, *argv)
    assert code == 3 and "regime" in err
    code, out, _ = run(capsys, *argv, "--force")
    assert code == 0 and float(fields(out)["bound_implementation"]) == 1.0


def test_bound_rejects_bad_arguments(capsys):
    assert run(capsys, "bound", "--class", "f", "--L", "-1", "--mu", "1", "--R", "1", "--d", "2", "--eps", "1")[0] == 2
    assert run(capsys, "bound", "--class", "f", "--L", "1", "--mu", "1", "--R", "1", "--d", "2", "--eps", "0")[0] == 2


def test_privatize_is_seeded_and_audit_warns(capsys):
    argv = ["privatize", "--route", "sc", "--objective", str(CONFIGS / "sc_tight.ini"), "--eps", "4", "--seed", "2"]
    code, out, err = run(capsys, *argv)
    assert code == 0 and "pre_noise_point" not in out and err == ""
    assert run(capsys, *argv)[1] == out
    code, audit_out, err = run(capsys, *argv, "--audit")
    assert "NOT private" in err
    info = fields(audit_out)
    assert info["w_private"] == fields(out)["w_private"]
    assert len(info["pre_noise_point"].split(",")) == 2


def test_privatize_writes_trace(capsys, tmp_path):
    trace = tmp_path / "trace.csv"
    code, _, _ = run(capsys, "privatize", "--route", "sc", "--objective", str(CONFIGS / "sc_tight.ini"), "--eps", "4", "--trace", str(trace))
    assert code == 0
    lines = trace.read_text().splitlines()
    assert len(lines) > 2 and "," in lines[0]


def test_baselines(capsys):
    code, out, _ = run(capsys, "baseline", "expmech", "--objective", str(CONFIGS / "tight_1d.ini"), "--eps", "2")
    assert code == 0 and float(fields(out)["excess_risk"]) >= 0
    assert run(capsys, "baseline", "exploc", "--objective", str(CONFIGS / "tight_1d.ini"), "--eps", "16")[0] == 3
    code, out, _ = run(capsys, "baseline", "exploc", "--objective", str(CONFIGS / "tight_1d.ini"), "--eps", "16", "--force")
    assert code == 0 and np.isfinite(float(fields(out)["excess_risk"]))


def test_run_config_writes_csv(capsys, tmp_path):
    cfg = tmp_path / "small.ini"
    cfg.write_text(
        "[objective]\nkind = tight\nn = 50\nd = 2\nmu = 1\nL = 1\n\n[privacy]\neps = 2, 8\ndelta = 0\n\n"
        "[mechanism]\nroute = sc\n\n[experiment]\ntrials = 50\nseed = 4\n"
    )
    out_csv = tmp_path / "out.csv"
    code, _, _ = run(capsys, "run", "--config", str(cfg), "--output", str(out_csv))
    assert code == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0].startswith("route,eps,delta") and len(lines) == 3


def test_run_missing_config_is_an_error(capsys, tmp_path):
    assert run(capsys, "run", "--config", str(tmp_path / "absent.ini"))[0] == 2


def test_entry_point_subprocess():
    proc = subprocess.run([sys.executable, "-m", "privopt", "bound", "--class", "g", "--L", "1", "--R", "1", "--d", "1", "--n", "100", "--eps", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert float(dict(l.split(": ", 1) for l in proc.stdout.splitlines())["lambda"]) > 0


def test_verify_exit_codes(capsys, monkeypatch, tmp_path):
    from privopt import harness

    report = harness.ExperimentReport([])
    monkeypatch.setattr(harness, "verify", lambda seed, quick: (report, [harness.CheckResult("ok", True, "fine")]))
    code, _, err = run(capsys, "verify", "--quick", "--output", str(tmp_path / "v.csv"))
    assert code == 0 and "PASS ok" in err
    monkeypatch.setattr(harness, "verify", lambda seed, quick: (report, [harness.CheckResult("bad", False, "broken")]))
    code, _, err = run(capsys, "verify", "--quick", "--output", str(tmp_path / "v.csv"))
    assert code == 4 and "FAIL bad" in err

import csv
import json
import os
import subprocess
from pathlib import Path

import pytest

WPT = os.environ.get("WPT_CLI", "wpt")
SMALL = {"network": {"n_sensors": 2, "horizon": 4}, "channel": {"deterministic_fading": True}}


def run(*args, cwd):
    return subprocess.run([WPT, *map(str, args)], cwd=cwd, capture_output=True, text=True)


@pytest.fixture
def small(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL))
    return path


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_optimize_writes_plan_summary_and_channels(tmp_path):
    r = run("--out-dir", "out", "optimize", "--dump-channels", "channels.csv", cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    plan = read_csv(tmp_path / "out" / "plan.csv")
    assert list(plan[0]) == ["t", "i", "p_watts", "q_watts"]
    assert len(plan) == 20 * 8
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["label"] == "OPT-L-L"
    assert summary["kkt_residual"] <= 1e-6
    assert 0.0 <= summary["normalized_distortion"] <= 1.0
    channels = read_csv(tmp_path / "out" / "channels.csv")
    assert list(channels[0]) == ["t", "i", "h", "g2", "sigma2"]
    assert len(channels) == 20 * 8


def test_mismatch_label(tmp_path, small):
    r = run("--scenario", small, "optimize", "--assumed", "L", "--actual", "Q", cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    assert json.loads((tmp_path / "summary.json").read_text())["label"] == "OPT-L-Q"


def test_train_then_evaluate(tmp_path, small):
    r = run("--scenario", small, "train", "--episodes", "60", cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    curve = read_csv(tmp_path / "curve.csv")
    assert list(curve[0]) == ["episode", "mean_distortion", "kl", "policy_entropy", "time_slots"]
    assert [int(row["episode"]) for row in curve] == [20, 40, 60]
    assert int(curve[-1]["time_slots"]) == 60 * 4
    blob = (tmp_path / "policy.bin").read_bytes()
    assert blob[:8] == b"WPTCKPT\0"
    r = run("--scenario", small, "evaluate", "--checkpoint", "policy.bin", "--episodes", "2", cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    ev = json.loads((tmp_path / "evaluation.json").read_text())
    assert ev["episodes"] == 2 and ev["std_distortion"] == 0.0


def test_checkpoint_for_another_network_is_rejected(tmp_path, small):
    assert run("--scenario", small, "train", "--episodes", "20", cwd=tmp_path).returncode == 0
    r = run("evaluate", "--checkpoint", "policy.bin", "--episodes", "1", cwd=tmp_path)
    assert r.returncode == 2


def test_sweep_csv(tmp_path, small):
    r = run("--scenario", small, "sweep", "--budgets", "1,2,3", "--labels", "OPT-L-Q,OPT-Q-Q", cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    rows = read_csv(tmp_path / "sweep.csv")
    assert list(rows[0]) == ["label", "budget_w", "normalized_distortion", "realizations", "std_error"]
    assert len(rows) == 6
    for b in range(3):
        assert float(rows[2 * b]["normalized_distortion"]) >= float(rows[2 * b + 1]["normalized_distortion"]) - 1e-12


def test_fit_eh_from_csv(tmp_path):
    data = tmp_path / "cal.csv"
    data.write_text("input_mw,output_mw\n" + "".join(f"{x},{0.25 * x}\n" for x in (0.1, 0.5, 1.0, 2.0)))
    r = run("fit-eh", "--variant", "L", "--data", data, cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    fit = json.loads((tmp_path / "eh_fit.json").read_text())
    assert fit["linear"]["zeta"] == pytest.approx(0.25, rel=1e-12)


def test_dump_profile(tmp_path):
    r = run("dump-profile", cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    assert len(read_csv(tmp_path / "profile.csv")) == 20 * 8
    assert json.loads((tmp_path / "profile.json").read_text())["periodicity_score"] <= 0.05


@pytest.mark.parametrize(
    "args",
    [
        ["--scenario", "missing.json", "optimize"],
        ["optimize", "--assumed", "S"],
        ["sweep", "--labels", "OPT-X-L"],
        ["fit-eh", "--variant", "Z"],
        ["evaluate", "--checkpoint", "missing.bin"],
        ["optimize", "--no-such-flag"],
    ],
)
def test_validation_errors_exit_2(tmp_path, args):
    assert run(*args, cwd=tmp_path).returncode == 2


def test_unknown_scenario_key_exits_2(tmp_path):
    (tmp_path / "bad.json").write_text('{"network": {"budget": 1}}')
    r = run("--scenario", "bad.json", "optimize", cwd=tmp_path)
    assert r.returncode == 2
    assert "network.budget" in r.stderr


def test_seed_override_changes_the_field(tmp_path):
    a = run("--seed", "1", "--out-dir", "a", "optimize", cwd=tmp_path)
    b = run("--seed", "2", "--out-dir", "b", "optimize", cwd=tmp_path)
    assert a.returncode == b.returncode == 0
    sa = json.loads((tmp_path / "a" / "summary.json").read_text())
    sb = json.loads((tmp_path / "b" / "summary.json").read_text())
    assert sa["objective"] != sb["objective"]

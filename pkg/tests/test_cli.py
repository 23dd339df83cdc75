import json
import subprocess
import sys

import pytest

from drifttrack.cli import main

BASE = {
    "problem": {"family": "least_squares", "dim": 6, "n_samples": 12},
    "algorithm": "psg",
    "schedule": {"kind": "constant", "eta": 0.3},
    "horizon": 8,
    "trials": 3,
    "seed": 0,
}


def _write_config(tmp_path, name="cfg.json", **overrides):
    path = tmp_path / name
    path.write_text(json.dumps({**BASE, **overrides}))
    return str(path)


def test_simulate_writes_the_report(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    out = tmp_path / "report"
    code = main(["simulate", "--config", cfg, "--output-dir", str(out)])
    assert code == 0
    captured = capsys.readouterr()
    assert "final mean squared distance" in captured.out
    assert str(out) in captured.out
    for name in ("series.csv", "meta.json", "series.svg", "series.png"):
        assert (out / name).exists()


def test_schedule_prints_epochs_and_regime(tmp_path, capsys):
    cfg = _write_config(
        tmp_path, schedule={"kind": "decay_dist_expectation"}, horizon=20
    )
    assert main(["schedule", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "schedule kind: decay_dist_expectation" in out
    assert "epoch 0" in out
    assert "eta_star" in out
    assert "final_guarantee" in out
    assert "regime: low" in out


def test_bounds_streams_csv_without_an_output_dir(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    assert main(["bounds", "--config", cfg]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t,bound_dist,bound_gap"
    assert len(lines) == BASE["horizon"] + 2
    first = lines[1].split(",")
    assert first[0] == "0"
    assert float(first[1]) > 0.0


def test_bounds_writes_a_file_with_an_output_dir(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    out = tmp_path / "bnd"
    assert main(["bounds", "--config", cfg, "--output-dir", str(out)]) == 0
    assert "bounds.csv" in capsys.readouterr().out
    assert (out / "bounds.csv").read_text().startswith("t,bound_dist,bound_gap\n")


def test_bounds_reports_the_guarantee_for_decay_schedules(tmp_path, capsys):
    cfg = _write_config(tmp_path, schedule={"kind": "decay_dist_expectation"})
    assert main(["bounds", "--config", cfg]) == 0
    captured = capsys.readouterr()
    assert "final guarantee" in captured.out
    assert "per-step bounds" in captured.err


def test_sweep_prints_one_line_per_value(tmp_path, capsys):
    cfg = _write_config(
        tmp_path,
        schedule={"kind": "constant"},
        sweep={"param": "eta", "values": [0.1, 0.3]},
    )
    assert main(["sweep", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "swept eta over 2 values" in out
    assert "eta=0.1" in out
    assert "eta=0.3" in out


def test_calibrate_writes_json(tmp_path, capsys):
    cfg = _write_config(
        tmp_path,
        bound_family="highprob",
        trials=200,
        horizon=6,
    )
    out = tmp_path / "cal"
    assert main(["calibrate", "--config", cfg, "--output-dir", str(out)]) == 0
    assert "calibrated c" in capsys.readouterr().out
    data = json.loads((out / "calibration.json").read_text())
    assert set(data) == {"c", "coverage", "target", "trials", "metric", "bound"}
    assert data["coverage"] >= data["target"]


def test_bad_config_exits_with_an_error(tmp_path, capsys):
    cfg = _write_config(tmp_path, workers=4)
    assert main(["simulate", "--config", cfg]) == 2
    assert "error:" in capsys.readouterr().err


def test_calibrate_refuses_the_expectation_family(tmp_path, capsys):
    cfg = _write_config(tmp_path, trials=200)
    assert main(["calibrate", "--config", cfg]) == 2
    assert "highprob" in capsys.readouterr().err


def test_missing_config_flag_is_a_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(["simulate"])
    assert excinfo.value.code == 2


def test_module_entry_point_runs(tmp_path):
    cfg = _write_config(tmp_path)
    proc = subprocess.run(
        [sys.executable, "-m", "drifttrack.cli", "schedule", "--config", cfg],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "schedule kind: constant" in proc.stdout

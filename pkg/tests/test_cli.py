from __future__ import annotations

import json

import pytest

from jointobs.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, main, parse_groups
from jointobs.observation import ConfigError


def scenario_file(tmp_path, **extra):
    data = {"occupation": "O1", "disruption": "D1", "group": "S10"}
    data.update(extra)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(data))
    return path


# ---------------------------------------------------------------------------
# Group parsing
# ---------------------------------------------------------------------------


def test_parse_groups_range():
    assert parse_groups("S1..S10") == [f"S{i}" for i in range(1, 11)]


def test_parse_groups_list():
    assert parse_groups("S1,S4,S7") == ["S1", "S4", "S7"]


def test_parse_groups_mixed():
    assert parse_groups("S1..S3,S10") == ["S1", "S2", "S3", "S10"]


def test_parse_groups_unknown():
    with pytest.raises(ConfigError):
        parse_groups("S42")


# ---------------------------------------------------------------------------
# matrix
# ---------------------------------------------------------------------------


def test_matrix_single_group_writes_78_rows(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["matrix", "--groups", "S10", "--seed", "7", "--out", str(out),
                 "--no-figures"])
    assert code == EXIT_OK
    lines = (out / "matrix.csv").read_text().splitlines()
    assert len(lines) == 1 + 78
    assert "cells: 78" in capsys.readouterr().out


def test_matrix_full_sweep_writes_780_rows(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["matrix", "--groups", "S1..S10", "--seed", "7", "--out", str(out),
                 "--no-figures"])
    assert code == EXIT_OK
    assert len((out / "matrix.csv").read_text().splitlines()) == 1 + 780


def test_matrix_renders_figures_by_default(tmp_path):
    out = tmp_path / "run"
    assert main(["matrix", "--groups", "S10", "--out", str(out)]) == EXIT_OK
    assert (out / "figures" / "accuracy_matrix.png").exists()


def test_matrix_bad_config_key_exits_2(tmp_path, capsys):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({"not_a_real_key": 1}))
    code = main(["matrix", "--config", str(config), "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    assert "unknown config key" in capsys.readouterr().err


def test_matrix_flag_overrides_win_over_file(tmp_path):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"vote_weight": 3.0}))
    out = tmp_path / "run"
    code = main(["matrix", "--config", str(config), "--w", "1.0", "--groups", "S10",
                 "--out", str(out), "--no-figures"])
    assert code == EXIT_OK
    echo = json.loads((out / "effective_config.json").read_text())
    assert echo["vote_weight"] == 1.0


# ---------------------------------------------------------------------------
# learn
# ---------------------------------------------------------------------------


def test_learn_user_a_writes_ten_rows(tmp_path, capsys):
    out = tmp_path / "learn"
    code = main(["learn", "--user", "A", "--rounds", "10", "--out", str(out),
                 "--no-figures"])
    assert code == EXIT_OK
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert len(lines) == 1 + 10
    stdout = capsys.readouterr().out
    assert "round=1 p=0.731059" in stdout


def test_learn_user_c_final_probability_not_below_initial(tmp_path):
    out = tmp_path / "learn"
    assert main(["learn", "--user", "C", "--out", str(out), "--no-figures"]) == EXIT_OK
    rows = (out / "trajectory.csv").read_text().splitlines()[1:]
    probs = [float(r.split(",")[2]) for r in rows]
    assert probs[-1] >= probs[0]


def test_learn_unknown_user_exits_2(tmp_path, capsys):
    code = main(["learn", "--user", "X", "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    assert "unknown user" in capsys.readouterr().err


def test_learn_custom_schedule_file(tmp_path):
    schedule = tmp_path / "sched.json"
    schedule.write_text(json.dumps({"schedule": ["negative", "positive", "neutral"]}))
    out = tmp_path / "learn"
    code = main(["learn", "--user", str(schedule), "--rounds", "3", "--out", str(out),
                 "--no-figures"])
    assert code == EXIT_OK
    assert len((out / "trajectory.csv").read_text().splitlines()) == 1 + 3


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def test_simulate_prints_the_assist_decision(tmp_path, capsys):
    path = scenario_file(tmp_path)
    assert main(["simulate", str(path), "--seed", "3"]) == EXIT_OK
    stdout = capsys.readouterr().out
    assert "action=receive-visitor" in stdout
    assert "correct=true" in stdout
    assert "channel=physical-embodied" in stdout


def test_simulate_respects_clock_period_flag(tmp_path, capsys):
    path = scenario_file(tmp_path)
    assert main(["simulate", str(path), "--period", "20"]) == EXIT_OK
    stdout = capsys.readouterr().out
    now = int(stdout.split("now=")[1].split("ms")[0])
    assert now % 20 == 0


def test_simulate_dry_run_echoes_config_only(tmp_path, capsys):
    path = scenario_file(tmp_path)
    assert main(["simulate", str(path), "--dry-run"]) == EXIT_OK
    stdout = capsys.readouterr().out
    assert json.loads(stdout)["period_ms"] == 20
    assert "action=" not in stdout


def test_simulate_missing_file_exits_3(tmp_path, capsys):
    code = main(["simulate", str(tmp_path / "nope.json")])
    assert code == EXIT_IO
    assert "does not exist" in capsys.readouterr().err


def test_simulate_group_override(tmp_path, capsys):
    path = scenario_file(tmp_path)
    assert main(["simulate", str(path), "--groups", "S7"]) == EXIT_OK
    stdout = capsys.readouterr().out
    assert "action=no-action" in stdout


def test_identical_invocation_identical_stdout(tmp_path, capsys):
    path = scenario_file(tmp_path)
    main(["simulate", str(path), "--seed", "9"])
    first = capsys.readouterr().out
    main(["simulate", str(path), "--seed", "9"])
    second = capsys.readouterr().out
    assert first == second

import json
import shutil

import pytest

from pareto_bandits.cli import main
from pareto_bandits.env import load_environment


def test_instance_round_trip(tmp_path, capsys):
    out = tmp_path / "env.json"
    assert main(["instance", "--family", "d1-variant", "--actions", "5", "--contexts", "4",
                 "--delta", "0.05", "--a0", "3", "--out", str(out)]) == 0
    env = load_environment(out)
    assert env.n_actions == 5 and env.reward_means[3, 0] == 0.95
    assert main(["instance", "--family", "pe-adversarial", "--actions", "4", "--contexts", "3",
                 "--delta", "0.3"]) == 0
    assert json.loads(capsys.readouterr().out)["n_actions"] == 4


def test_instance_bad_delta(capsys):
    assert main(["instance", "--family", "d1-variant", "--actions", "5", "--contexts", "4",
                 "--delta", "0.2"]) == 2
    assert "delta" in capsys.readouterr().err


def test_design_command(tmp_path, capsys):
    out = tmp_path / "pe.json"
    main(["instance", "--family", "pe-adversarial", "--actions", "4", "--contexts", "3",
          "--delta", "0.3", "--out", str(out)])
    capsys.readouterr()
    assert main(["design", "--env", str(out), "--exact", "--resolution", "30"]) == 0
    text = capsys.readouterr().out
    assert "g(pi)         3.000000" in text and "action    0" not in text
    assert main(["design", "--env", str(out)]) == 0
    assert "certified <= 6" in capsys.readouterr().out


def test_verify_commands(tmp_path, capsys):
    out = tmp_path / "b.json"
    main(["instance", "--family", "d1-benign", "--actions", "4", "--contexts", "2",
          "--delta", "0.1", "--out", str(out)])
    assert main(["verify", "--env", str(out), "--runs", "5", "--horizon", "300"]) == 0
    text = capsys.readouterr().out
    for ev in ("EA", "EZ", "EMG"):
        assert f"{ev:4s} runs=5" in text
    assert main(["verify", "--design"]) == 0
    assert "worst relative excess" in capsys.readouterr().out
    assert main(["verify"]) == 2


def test_simulate_and_sweep(tmp_path):
    run = tmp_path / "run.toml"
    run.write_text(
        'horizon = 400\nreplicates = 2\nseed = 1\n'
        '[env]\nfamily = "d1-benign"\nactions = 5\ncontexts = 4\ndelta = 0.1\n'
        '[policy]\npolicy = "ucb"\n')
    assert main(["simulate", "--config", str(run), "--out", str(tmp_path / "o1")]) == 0
    assert main(["simulate", "--config", str(run), "--out", str(tmp_path / "o2")]) == 0
    for f in ("regret.csv", "metadata.json", "regret.svg"):
        assert (tmp_path / "o1" / f).read_bytes() == (tmp_path / "o2" / f).read_bytes()

    sweep = tmp_path / "sweep.toml"
    sweep.write_text(
        'horizon = 300\nreplicates = 1\nseed = 0\ndelta = "1/T"\nz2_multipliers = [1, 2]\n'
        '[policy]\npolicy = "db"\nbase = [{policy = "cucb"}, {policy = "ucb"}]\n'
        '[benign_env]\nfamily = "d1-benign"\nactions = 6\ncontexts = 4\ndelta = 0.05\n'
        '[hard_env]\nfamily = "d1-variant"\nactions = 6\ncontexts = 4\ndelta = 0.05\n')
    assert main(["sweep-pareto", "--config", str(sweep), "--out", str(tmp_path / "s")]) == 0
    rows = (tmp_path / "s" / "pareto.csv").read_text().splitlines()
    assert rows[0] == "z2,benign_regret,benign_stderr,hard_regret,hard_stderr"
    assert len(rows) == 3
    assert (tmp_path / "s" / "pareto.svg").exists()


def test_bundled_configs_parse(tmp_path):
    from pareto_bandits.config import load_toml
    from pareto_bandits.harness import RunConfig
    import pathlib
    root = pathlib.Path(__file__).resolve().parents[1] / "configs"
    cfg = RunConfig.from_dict(load_toml(root / "run.toml"), base_dir=root)
    assert cfg.environment().n_actions == 30
    data = load_toml(root / "sweep.toml")
    assert data["z2_multipliers"] == [1, 2, 4, 8]


def test_missing_config(capsys):
    assert main(["simulate", "--config", "/nonexistent.toml", "--out", "/tmp/x"]) == 2

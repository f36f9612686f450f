import json

import numpy as np
import pytest

from ensdecomp import cli
from ensdecomp.decomp import DecompositionReport
from ensdecomp.estimators import SweepEntry


def write_config(tmp_path, **overrides):
    base = {
        "task": "regression",
        "loss": "squared",
        "learner": "bagging",
        "max_depth": 3,
        "n_trials": 2,
        "m_max": 3,
        "n_samples": 80,
        "n_test": 20,
        "dataset": "friedman_regression",
        "seed": 5,
        "out_dir": str(tmp_path),
    }
    base.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(base))
    return str(path)


def test_decompose_regression_contract(tmp_path):
    config = write_config(tmp_path)
    assert cli.main(["decompose", "--config", config]) == 0
    csv_text = (tmp_path / "decompose.csv").read_text()
    lines = csv_text.strip().split("\n")
    assert lines[0] == "M,expected_loss,noise,average_bias,average_variance,diversity,residual"
    assert len(lines) == 4  # header + one row per M
    summary = json.loads((tmp_path / "decompose.json").read_text())
    assert summary["residuals_ok"] is True

    # CSV floats round-trip exactly against the JSON summary
    for line, row in zip(lines[1:], summary["rows"]):
        cells = line.split(",")
        assert float(cells[1]) == row["expected_loss"]
        assert float(cells[5]) == row["diversity"]


def test_decompose_deterministic_bytes(tmp_path):
    config = write_config(tmp_path)
    cli.main(["decompose", "--config", config])
    first = (tmp_path / "decompose.csv").read_bytes()
    first_json = (tmp_path / "decompose.json").read_bytes()
    cli.main(["decompose", "--config", config])
    assert (tmp_path / "decompose.csv").read_bytes() == first
    assert (tmp_path / "decompose.json").read_bytes() == first_json


def test_decompose_m_one_has_zero_diversity(tmp_path):
    config = write_config(tmp_path, m_values=[1])
    assert cli.main(["decompose", "--config", config]) == 0
    line = (tmp_path / "decompose.csv").read_text().strip().split("\n")[1]
    assert float(line.split(",")[5]) == 0.0


def test_decompose_vote_task(tmp_path):
    config = write_config(
        tmp_path,
        task="classification-vote",
        loss="zero_one",
        learner="adaboost",
        dataset="mease_binary",
        n_samples=120,
        n_test=30,
        m_max=4,
    )
    assert cli.main(["decompose", "--config", config]) == 0
    header = (tmp_path / "decompose.csv").read_text().split("\n")[0]
    assert header == "M,expected_loss,noise,bias_effect,variance_effect,diversity_effect,residual"


def test_decompose_proba_task(tmp_path):
    config = write_config(
        tmp_path,
        task="classification-probabilistic",
        loss="kl",
        learner="bagging",
        dataset="gaussian_blobs",
        n_classes=3,
        n_samples=150,
        n_test=30,
        m_max=3,
    )
    assert cli.main(["decompose", "--config", config]) == 0


def test_decompose_depth_sweep(tmp_path):
    config = write_config(tmp_path, depth_values=[1, 3], m_max=2)
    assert cli.main(["decompose", "--config", config]) == 0
    lines = (tmp_path / "decompose.csv").read_text().strip().split("\n")
    assert lines[0].startswith("depth,")
    assert [line.split(",")[0] for line in lines[1:]] == ["1", "3"]


def test_unknown_config_key(tmp_path, capsys):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"task": "regression", "bogus_key": 1}))
    assert cli.main(["decompose", "--config", str(path)]) == 2
    assert "bogus_key" in capsys.readouterr().err


def test_mlp_rejected(tmp_path, capsys):
    config = write_config(tmp_path, learner="mlp")
    assert cli.main(["decompose", "--config", config]) == 2
    assert "mlp" in capsys.readouterr().err


def test_incompatible_loss_task(tmp_path, capsys):
    config = write_config(tmp_path, loss="kl")
    assert cli.main(["decompose", "--config", config]) == 2
    assert "incompatible" in capsys.readouterr().err


def test_residual_violation_exit_code(tmp_path, monkeypatch):
    config = write_config(tmp_path)
    corrupted = SweepEntry(
        1,
        DecompositionReport(1.0, 0.0, 0.2, 0.2, 0.2),  # residual 0.8
        {"expected_loss": 0.0},
    )
    monkeypatch.setattr(cli, "sweep_ensemble_size", lambda *a, **k: [corrupted])
    assert cli.main(["decompose", "--config", config]) == 1


def test_theory_curve(tmp_path):
    path = tmp_path / "theory.json"
    path.write_text(json.dumps({
        "mode": "curve", "epsilons": [0.0, 0.3, 0.5, 1.0], "m_values": [3],
        "out_dir": str(tmp_path),
    }))
    assert cli.main(["theory", "--config", str(path)]) == 0
    lines = (tmp_path / "theory.csv").read_text().strip().split("\n")
    assert lines[0] == "epsilon,M,diversity_effect"
    table = {line.split(",")[0]: float(line.split(",")[2]) for line in lines[1:]}
    assert table["0.0"] == 0.0
    assert table["1.0"] == 0.0
    assert abs(table["0.5"]) <= 1e-12
    assert table["0.3"] == pytest.approx(0.084, abs=1e-12)
    assert not (tmp_path / "theory.svg").exists()
    assert cli.main(["theory", "--config", str(path), "--svg"]) == 0
    assert (tmp_path / "theory.svg").exists()


def test_theory_simulation(tmp_path):
    path = tmp_path / "theory.json"
    path.write_text(json.dumps({
        "mode": "simulate", "sim_k": 2, "sim_p_correct": 0.7, "sim_m": 5,
        "sim_replicates": 2000, "out_dir": str(tmp_path),
    }))
    assert cli.main(["theory", "--config", str(path)]) == 0
    lines = (tmp_path / "theory.csv").read_text().strip().split("\n")
    assert lines[0] == "k,p_correct,M,replicates,mean_de,se"
    assert len(lines) == 2


def test_verify_passes_and_negative_control(capsys):
    assert cli.main(["verify", "--counts", "20"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "max residual" in out
    assert cli.main(["verify", "--counts", "20", "--inject-fault"]) == 1
    out = capsys.readouterr().out
    assert "FAIL" in out


def test_scatter(tmp_path):
    config = write_config(
        tmp_path,
        task="classification-probabilistic",
        loss="kl",
        learner="bagging",
        dataset="gaussian_blobs",
        n_classes=3,
        separation=3.0,
        n_samples=300,
        m_max=4,
        split_fractions=[0.6, 0.2, 0.2],
    )
    assert cli.main(["scatter", "--config", config]) == 0
    lines = (tmp_path / "scatter.csv").read_text().strip().split("\n")
    assert lines[0] == "M,diversity,gain"
    first = lines[1].split(",")
    assert first[0] == "1" and float(first[1]) == 0.0  # M=1 has no diversity
    summary = json.loads((tmp_path / "scatter.json").read_text())
    assert 0.0 <= summary["r_squared"] <= 1.0
    assert np.isfinite(summary["r_squared"])


def test_scatter_empty_split(tmp_path, capsys):
    config = write_config(
        tmp_path,
        task="classification-probabilistic",
        loss="kl",
        learner="bagging",
        dataset="gaussian_blobs",
        n_samples=10,
        split_fractions=[0.99, 0.005, 0.005],
    )
    assert cli.main(["scatter", "--config", config]) == 2
    assert "empty" in capsys.readouterr().err


def test_seed_override_changes_output(tmp_path):
    config = write_config(tmp_path)
    cli.main(["decompose", "--config", config])
    base = (tmp_path / "decompose.csv").read_text()
    cli.main(["decompose", "--config", config, "--seed", "123"])
    assert (tmp_path / "decompose.csv").read_text() != base

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from difflab.cli import main
from difflab.config import OUT_ENV
from difflab.network import TrainedDenoiser


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def report(path):
    return json.loads((path / "report.json").read_text())


def write(path, text):
    path.write_text(text)
    return str(path)


def test_sample_deterministic(tmp_path):
    args = [
        "sample",
        "--benchmark",
        "bimodal",
        "--lambda",
        "0",
        "--steps",
        "256",
        "--chains",
        "100000",
        "--seed",
        "7",
    ]
    assert run(tmp_path / "a", *args) == 0
    assert run(tmp_path / "b", *args) == 0
    a = (tmp_path / "a" / "samples.csv").read_bytes()
    assert a == (tmp_path / "b" / "samples.csv").read_bytes()
    assert a.startswith(b"chain,x0\n0,")


def test_sample_report_matches_targets(tmp_path):
    cfg = write(
        tmp_path / "c.yaml", "population: {benchmark: bimodal}\nsampler: {chains: 100000}\n"
    )
    assert main(["sample", "--config", cfg, "--out", str(tmp_path)]) == 0
    rep = report(tmp_path)
    s = rep["results"]["summary"]
    assert abs(s["mean"][0]) <= 0.02
    assert abs(s["variance"][0] / 4.251 - 1) <= 0.02
    assert np.all(np.abs(np.array(s["mode_masses"]) / 0.5 - 1) <= 0.01)
    assert rep["seed"] == 0 and rep["config"]["population"]["benchmark"] == "bimodal"
    assert rep["wall_time_s"] >= 0
    with open(tmp_path / "samples.csv") as fh:
        assert sum(1 for _ in csv.reader(fh)) == 100_001


def test_negative_lambda_exit_2(tmp_path, capsys):
    assert run(tmp_path, "sample", "--benchmark", "bimodal", "--lambda", "-1") == 2
    assert "lambda" in capsys.readouterr().err


def test_missing_population_exit_2(tmp_path, capsys):
    assert run(tmp_path, "nll", "--y", "0") == 2
    assert "population" in capsys.readouterr().err


def test_unknown_config_key_exit_2(tmp_path):
    cfg = write(tmp_path / "c.yaml", "sampler: {bogus: 1}\n")
    assert run(tmp_path, "sample", "--config", cfg) == 2


def test_flags_override_config(tmp_path):
    cfg = write(
        tmp_path / "c.yaml",
        "seed: 3\npopulation: {benchmark: standard_normal}\ngrid: {steps: 8}\n"
        "sampler: {chains: 50, lambda: 0.5}\n",
    )
    assert run(tmp_path, "sample", "--config", cfg, "--seed", "5", "--lambda", "2") == 0
    rep = report(tmp_path)
    assert rep["seed"] == 5
    assert rep["config"]["sampler"]["lambda"] == 2.0
    assert rep["config"]["grid"]["steps"] == 8


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
    assert main(["mi", "--benchmark", "standard_normal", "--mc", "100"]) == 0
    assert (tmp_path / "env" / "report.json").exists()


def test_nll_standard_normal(tmp_path):
    assert run(tmp_path, "nll", "--benchmark", "standard_normal", "--y", "0", "--t0", "0.001") == 0
    pt = report(tmp_path)["results"]["points"][0]
    assert pt["total_nll"] == pytest.approx(0.9189, rel=0.01)
    assert {"integral_term", "boundary_term", "tail_term", "standard_error"} <= set(pt)


def test_nll_two_dim_point(tmp_path):
    assert run(tmp_path, "nll", "--benchmark", "bimodal_2d", "--y", "2,0", "--mc", "2000") == 0
    assert report(tmp_path)["results"]["points"][0]["y"] == [2.0, 0.0]


def test_nll_wrong_point_dim(tmp_path):
    assert run(tmp_path, "nll", "--benchmark", "bimodal", "--y", "1,2") == 2


def test_mi_standard_normal(tmp_path):
    assert run(tmp_path, "mi", "--benchmark", "standard_normal", "--t0", "1") == 0
    mi = report(tmp_path)["results"]["mutual_information"]
    assert mi["total"] == pytest.approx(0.3466, rel=0.01)


def test_entropy_standard_normal(tmp_path):
    assert run(tmp_path, "entropy", "--benchmark", "standard_normal") == 0
    ent = report(tmp_path)["results"]["entropy"]
    assert ent["total_nll"] == pytest.approx(1.41894, rel=0.015)


def test_check_benchmark_passes(tmp_path):
    assert run(tmp_path, "check", "--benchmark", "bimodal") == 0
    doc = json.loads((tmp_path / "diagnostics.json").read_text())
    assert doc["results"]["all_passed"]
    assert len(doc["results"]["checks"]) == 5


def test_check_forced_failure(tmp_path, capsys):
    assert (
        run(tmp_path, "check", "--benchmark", "bimodal", "--only", "score", "--tolerance", "1e-12")
        == 1
    )
    assert "score t=" in capsys.readouterr().err


def test_check_only_runs_one(tmp_path):
    assert run(tmp_path, "check", "--benchmark", "bimodal", "--only", "score") == 0
    doc = json.loads((tmp_path / "diagnostics.json").read_text())
    assert [c["name"] for c in doc["results"]["checks"]] == ["score"]


def test_check_unknown_name(tmp_path):
    assert run(tmp_path, "check", "--benchmark", "bimodal", "--only", "bogus") == 2


def test_train_then_sample_round_trip(tmp_path, caplog):
    assert (
        run(tmp_path, "train", "--benchmark", "bimodal", "--steps", "3000", "--arch", "2,16,16,1")
        == 0
    )
    assert "second moment" in caplog.text
    model = tmp_path / "model.json"
    assert TrainedDenoiser.load(model).dim == 1
    with open(tmp_path / "training_log.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["step", "loss"] and len(rows) == 3001
    losses = np.array([float(r[1]) for r in rows[1:]])
    assert losses[-200:].mean() < losses[:200].mean()
    out = tmp_path / "s"
    assert (
        main(
            [
                "sample",
                "--benchmark",
                "bimodal",
                "--denoiser",
                f"trained:{model}",
                "--chains",
                "500",
                "--steps",
                "32",
                "--out",
                str(out),
            ]
        )
        == 0
    )
    assert report(out)["results"]["sampler"]["init"] == "wide_gaussian"


def test_sample_from_samples_file_with_trained_model(tmp_path):
    assert (
        run(
            tmp_path, "train", "--benchmark", "standard_normal", "--steps", "200", "--arch", "2,8,1"
        )
        == 0
    )
    data = write(tmp_path / "data.csv", "x0\n" + "\n".join(str(v) for v in np.linspace(-2, 2, 50)))
    cfg = write(tmp_path / "c.yaml", f"population: {{samples: {data}}}\n")
    out = tmp_path / "s"
    assert (
        main(
            [
                "sample",
                "--config",
                cfg,
                "--denoiser",
                f"trained:{tmp_path / 'model.json'}",
                "--chains",
                "100",
                "--steps",
                "8",
                "--out",
                str(out),
            ]
        )
        == 0
    )


def test_missing_model_exit_2(tmp_path):
    assert (
        run(tmp_path, "sample", "--benchmark", "bimodal", "--denoiser", "trained:/nonexistent.json")
        == 2
    )


def test_train_divergence_exit_3(tmp_path, capsys):
    assert (
        run(tmp_path, "train", "--benchmark", "standard_normal", "--steps", "200", "--lr", "1e4")
        == 3
    )
    assert "non-finite" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "difflab",
            "sample",
            "--lambda",
            "-1",
            "--benchmark",
            "bimodal",
            "--out",
            str(tmp_path),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2 and "lambda" in proc.stderr

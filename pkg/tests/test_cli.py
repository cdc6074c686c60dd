import json

import numpy as np
import pytest

from frodo import cli
from frodo.clements import MeshPlan
from frodo.linalg import haar_random_unitary
from frodo.model import ConvergenceError


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_decompose_writes_plan(tmp_path):
    assert run("--out", tmp_path, "decompose", "--target", "haar", "--n", 4) == 0
    plan = MeshPlan.from_json((tmp_path / "plan.json").read_text())
    assert plan.dim == 4 and len(plan.blocks) == 6


def test_synthesize_with_plan_and_length(tmp_path):
    run("--out", tmp_path, "decompose", "--target", "dft", "--n", 3)
    out = tmp_path / "s"
    assert run("synthesize", "--target", "dft", "--n", 3, "--plan", tmp_path / "plan.json",
               "--length", 0.5, "--out", out) == 0
    doc = json.loads((out / "synthesis.json").read_text())
    assert doc["L_m"] == 0.5 and doc["fidelity"] > 0.99


def test_synthesize_prints_without_out(capsys):
    assert run("synthesize", "--target", "identity", "--n", 2, "--kappa", 3.0) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["kappa"] == 3.0 and doc["fidelity"] == pytest.approx(1.0)


def test_target_from_files(tmp_path):
    u = haar_random_unitary(3, 1)
    np.save(tmp_path / "u.npy", u)
    (tmp_path / "u.json").write_text(json.dumps({"real": u.real.tolist(), "imag": u.imag.tolist()}))
    for name in ("u.npy", "u.json"):
        assert run("synthesize", "--target", tmp_path / name, "--length", 0.3) == 0


def test_sweep_outputs(tmp_path):
    assert run("--out", tmp_path, "sweep", "--target", "dft", "--n", 3, "--points", 5) == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "L_m,kappa,fidelity,success_prob,uniformity"
    assert len(lines) == 6
    manifest = json.loads((tmp_path / "sweep_manifest.json").read_text())
    assert manifest["grid"]["points"] == 5 and manifest["seed"] == 0
    assert "plan_digest" in manifest["extra"]


def test_config_file_is_used(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[physical]\nbin_spacing_hz = 3.5e9\n\n[grid]\npoints = 4\nl_min = 0.01\n")
    out = tmp_path / "o"
    assert run("--config", cfg, "--out", out, "sweep", "--n", 3) == 0
    manifest = json.loads((out / "sweep_manifest.json").read_text())
    assert manifest["config"]["bin_spacing_hz"] == 3.5e9
    assert manifest["grid"] == {"l_min": 0.01, "l_max": 1.0, "points": 4}


def test_global_flags_after_subcommand(tmp_path):
    assert run("ensemble", "--n", 3, "--samples", 2, "--points", 3, "--seed", 5, "--out", tmp_path) == 0
    manifest = json.loads((tmp_path / "ensemble_manifest.json").read_text())
    assert manifest["seed"] == 5


def test_optimize_outputs(tmp_path):
    assert run("--out", tmp_path, "optimize", "--n", 4, "--length", 0.02, "--budget", 40) == 0
    trace = (tmp_path / "trace.csv").read_text().splitlines()
    assert trace[0] == "iteration,cost,fidelity,success_prob,uniformity"
    plan = MeshPlan.from_json((tmp_path / "optimized_plan.json").read_text())
    assert plan.dim == 4
    manifest = json.loads((tmp_path / "optimize_manifest.json").read_text())
    assert manifest["extra"]["final_cost"] <= manifest["extra"]["initial_cost"]


def test_dft_study_and_hadamard(tmp_path):
    assert run("--out", tmp_path, "dft-study", "--n-list", "2,3", "--points", 4) == 0
    assert (tmp_path / "dft_thresholds.csv").exists()
    assert run("--out", tmp_path, "parallel-hadamard", "--kappa-points", 3, "--max-rung", 2) == 0
    lines = (tmp_path / "parallel_hadamard.csv").read_text().splitlines()
    assert lines[0] == "kappa,ell,kappa_ell,fidelity,leakage"
    assert len(lines) == 1 + 4 * 5


@pytest.mark.parametrize("argv", [
    ["synthesize", "--target", "nonsense"],
    ["synthesize", "--target", "dft"],
    ["sweep", "--n", "3", "--l-min", "0.5", "--l-max", "0.1"],
    ["ensemble", "--n", "1", "--samples", "2"],
    ["--workers", "0", "decompose", "--n", "2"],
    ["--config", "/nonexistent.ini", "decompose", "--n", "2"],
])
def test_validation_errors_exit_1(tmp_path, argv):
    assert run("--out", tmp_path, *argv) == 1


def test_non_unitary_file_rejected(tmp_path):
    np.save(tmp_path / "bad.npy", np.ones((2, 2)))
    assert run("synthesize", "--target", tmp_path / "bad.npy") == 1


def test_convergence_failure_exit_2(monkeypatch):
    def boom(*a, **k):
        raise ConvergenceError("did not settle")

    monkeypatch.setattr(cli, "cmd_decompose", boom)
    assert run("decompose", "--n", 2) == 2


@pytest.mark.parametrize("argv", [
    ["ensemble", "--n", "3", "--samples", "2", "--points", "4", "--seed", "11"],
    ["dft-study", "--n-list", "3", "--points", "3", "--optimize", "--budget", "20"],
    ["parallel-hadamard", "--kappa-points", "5"],
    ["sweep", "--target", "haar", "--n", "4", "--points", "6", "--seed", "2"],
])
def test_repeat_runs_are_byte_identical(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("--out", a, *argv) == 0
    assert run("--out", b, "--workers", 2, *argv) == 0
    csvs = sorted(p.name for p in a.glob("*.csv"))
    assert csvs
    for name in csvs:
        assert (a / name).read_bytes() == (b / name).read_bytes()

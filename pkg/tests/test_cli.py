import json
import subprocess
import sys

import numpy as np
import pytest

from coxht import cli
from coxht.model import read_cohort_csv
from coxht.state import StateSolverError


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_generate_fit_exists(tmp_path, capsys):
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps({"model": {"n": 60, "p": 6, "kappa": 1.0}}))
    out = tmp_path / "c.csv"
    code, text, _ = _run(capsys, "generate", "--config", str(cfg), "--seed", "3", "--out", str(out))
    assert code == 0
    info = json.loads(text)
    assert info["n"] == 60 and info["p"] == 6
    meta = json.loads(out.with_suffix(".json").read_text())
    assert len(meta["beta"]) == 6 and meta["seed"] == 3
    assert read_cohort_csv(out).X.shape == (60, 6)

    code, text, _ = _run(capsys, "exists", str(out))
    assert code == 0 and json.loads(text)["exists"] is True
    code, text, _ = _run(capsys, "fit", str(out))
    fit = json.loads(text)
    assert code == 0 and fit["converged"] and len(fit["fisher_std"]) == 6

    # same seed, same bytes
    out2 = tmp_path / "c2.csv"
    _run(capsys, "generate", "--config", str(cfg), "--seed", "3", "--out", str(out2))
    assert out.read_bytes() == out2.read_bytes()


def test_boundary_stdout_and_file(tmp_path, capsys):
    code, text, _ = _run(capsys, "boundary", "--kappa-grid", "0.5,1", "--n", "30", "--reps", "3",
                         "--workers", "1")
    assert code == 0
    lines = text.strip().split("\n")
    assert lines[0] == "kappa,delta_hat,stderr,n,reps" and len(lines) == 3
    assert float(lines[1].split(",")[1]) > 0
    out = tmp_path / "b" / "curve.csv"
    code, _, _ = _run(capsys, "boundary", "--kappa-grid", "1", "--n", "30", "--reps", "3",
                      "--workers", "1", "--out", str(out))
    assert code == 0 and out.exists() and out.with_suffix(".png").exists()


def test_solve_state_prints_solution(capsys):
    code, text, _ = _run(capsys, "solve-state", "--kappa", "1", "--delta", "0.2", "--nrep", "300")
    sol = json.loads(text)
    assert code == 0 and sol["converged"] and sol["a_star"] > 1


def test_experiment_command(tmp_path, capsys):
    cfg = tmp_path / "e.json"
    cfg.write_text(json.dumps({"model": {"n": 40}, "grids": {"delta": [0.3], "kappa": [1.0]},
                               "reps": 2, "boundary_reps": 2}))
    code, text, _ = _run(capsys, "experiment", "phase_diagram", "--config", str(cfg),
                         "--seed", "2", "--out", str(tmp_path / "o"), "--workers", "1",
                         "--no-plots", "--gnuplot")
    assert code == 0
    files = json.loads(text)["files"]
    assert any(f.endswith("phase_diagram.csv") for f in files)
    assert (tmp_path / "o" / "phase_diagram.gp").exists()
    assert not list((tmp_path / "o").glob("*.png"))
    meta = json.loads((tmp_path / "o" / "phase_diagram.json").read_text())
    assert meta["config"]["seed"] == 2


@pytest.mark.parametrize("argv", [
    ["generate"],
    ["generate", "--config", "/nonexistent.json"],
    ["fit", "/nonexistent.csv"],
    ["boundary", "--kappa-grid", "1,x"],
    ["boundary", "--kappa-grid", "2,1"],
    ["boundary", "--censor", "1"],
    ["solve-state", "--kappa", "1", "--delta", "0"],
    ["experiment", "consistency"],
])
def test_bad_input_exits_2(argv, capsys):
    assert _run(capsys, *argv)[0] == 2


def test_bad_experiment_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "e.json"
    cfg.write_text(json.dumps({"experiment": "null_dist", "reps": 1}))
    assert _run(capsys, "experiment", "consistency", "--config", str(cfg))[0] == 2
    cfg.write_text(json.dumps({"reps": 0}))
    code, _, err = _run(capsys, "experiment", "consistency", "--config", str(cfg))
    assert code == 2 and "reps" in err


def test_numerical_failure_exits_3(monkeypatch, capsys):
    def fail(*a, **k):
        raise StateSolverError("every start hit a non-finite objective")
    monkeypatch.setattr(cli, "solve_for_params", fail)
    code, _, err = _run(capsys, "solve-state", "--kappa", "1", "--delta", "0.2")
    assert code == 3 and "numerical failure" in err


def test_unconverged_state_exits_3(monkeypatch, capsys):
    class Sol:
        converged = False

        def to_dict(self):
            return {"converged": False}
    monkeypatch.setattr(cli, "solve_for_params", lambda *a, **k: Sol())
    assert _run(capsys, "solve-state", "--kappa", "1", "--delta", "0.2")[0] == 3


def test_singular_fit_exits_3(tmp_path, capsys):
    f = tmp_path / "s.csv"
    f.write_text("id,Y,Delta,X1\n0,3.0,1,1.0\n1,2.0,1,1.0\n2,1.0,1,1.0\n")
    assert _run(capsys, "fit", str(f))[0] == 3


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "coxht.cli", "boundary", "--kappa-grid", "1",
                        "--n", "20", "--reps", "2", "--workers", "1"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0
    assert r.stdout.startswith("kappa,delta_hat")
    assert np.isfinite(float(r.stdout.split("\n")[1].split(",")[1]))

import json

import numpy as np
import pytest
from outputs import snapshot

from coxht.experiments import (ConfigError, ExperimentConfig, content_hash, crossing_point,
                               read_csv, run_experiment, write_csv)

SMALL = {
    "phase_diagram": {"model": {"n": 40}, "grids": {"delta": [0.3, 0.6], "kappa": [1.0]},
                      "reps": 4, "boundary_reps": 4},
    "consistency": {"model": {"n": 80}, "grids": {"delta": [0.1], "kappa": [1.0]},
                    "reps": 3, "n_rep": 200},
    "null_dist": {"model": {"n": 80, "beta_scheme": "half_sparse"},
                  "grids": {"delta": [0.2], "kappa": [1.0]}, "reps": 3, "n_rep": 200,
                  "null_coords": 6, "chi2_dof": [2]},
    "classical_failure": {"model": {"n": 80, "beta_scheme": "half_sparse"},
                          "grids": {"delta": [0.1], "kappa": [1.0]}, "reps": 3,
                          "n_rep": 200, "lrt_coords": 2},
}


def _cfg(name, **kw):
    return ExperimentConfig.from_dict({"experiment": name, "seed": 5, **SMALL[name], **kw})


@pytest.mark.parametrize("name", sorted(SMALL))
def test_rerun_is_byte_identical_across_worker_counts(name, tmp_path):
    cfg = _cfg(name)
    run_experiment(cfg, out_dir=tmp_path / "a", workers=1, plots=True, gnuplot=True)
    run_experiment(cfg, out_dir=tmp_path / "b", workers=2, plots=True, gnuplot=True)
    a, b = snapshot(tmp_path / "a"), snapshot(tmp_path / "b")
    assert sorted(a) == sorted(b)
    assert any(f.endswith(".png") for f in a) and any(f.endswith(".gp") for f in a)
    for f in a:
        assert a[f] == b[f], f


def test_seed_changes_output(tmp_path):
    run_experiment(_cfg("phase_diagram"), out_dir=tmp_path / "a", workers=1, plots=False)
    run_experiment(_cfg("phase_diagram", seed=6), out_dir=tmp_path / "b", workers=1,
                   plots=False)
    # the existence fractions saturate at this size, the QP boundary does not
    a = (tmp_path / "a" / "boundary.csv").read_bytes()
    assert a != (tmp_path / "b" / "boundary.csv").read_bytes()
    assert not list((tmp_path / "a").glob("*.png"))


def test_consistency_columns_and_sidecar(tmp_path):
    cfg = _cfg("consistency")
    res = run_experiment(cfg, out_dir=tmp_path, workers=1, plots=False)
    header, rows = read_csv(tmp_path / "consistency.csv")
    assert header[:2] == ["kappa", "delta"] and len(rows) == 1
    meta = json.loads((tmp_path / "consistency.json").read_text())
    assert meta["config_hash"] == content_hash(cfg.to_dict())
    assert meta["config"]["seed"] == 5
    assert "wall_time_s" in meta
    assert any(str(f).endswith("consistency.csv") for f in res.files)


def test_null_dist_requires_half_sparse(tmp_path):
    cfg = _cfg("null_dist", model={"n": 80})
    with pytest.raises(ConfigError):
        run_experiment(cfg, out_dir=tmp_path, workers=1, plots=False)


@pytest.mark.parametrize("bad", [
    {"experiment": "bootstrap"},
    {"experiment": "consistency", "reps": 0},
    {"experiment": "consistency", "grids": {"delta": [0.1]}},
    {"experiment": "consistency", "grids": {"delta": [-0.1], "kappa": [1.0]}},
    {"experiment": "consistency", "grids": {"delta": [0.001], "kappa": [1.0]}},
    {"experiment": "consistency", "colour": "red"},
    {"experiment": "consistency", "model": {"n": 10, "kappa": -1.0}},
    {"experiment": "consistency", "state_centering": "median"},
    {"experiment": "consistency", "seed": -1},
    {"reps": 3},
    [1, 2],
])
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)


def test_config_round_trip(tmp_path):
    cfg = _cfg("null_dist")
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.from_json(path).to_dict() == cfg.to_dict()
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(path)
    assert [m.p for _, _, m in cfg.cells()] == [16]


def test_csv_round_trip(tmp_path):
    f = write_csv(tmp_path / "t.csv", ["x", "flag", "k"], [(0.1, True, 3), (np.float64(2.5), False, 0)])
    assert f.read_text() == "x,flag,k\n0.1,true,3\n2.5,false,0\n"
    header, rows = read_csv(f)
    assert header == ["x", "flag", "k"] and rows[1] == ["2.5", "false", "0"]


def test_crossing_point():
    assert crossing_point([0.1, 0.2, 0.3], [1.0, 0.8, 0.2]) == pytest.approx(0.25)
    assert crossing_point([0.2, 0.1], [0.4, 0.6]) == pytest.approx(0.15)
    assert np.isnan(crossing_point([0.1, 0.2], [1.0, 0.9]))

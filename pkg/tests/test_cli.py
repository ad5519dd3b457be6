import json
import os
import subprocess
import sys

import numpy as np
import pytest

from spmrf.cli import main, read_draws
from spmrf.datasets import bin_by_year, coal_events, load_coal, load_dataset, read_series

SMALL = ["--chains", "2", "--warmup", "60", "--iters", "60", "--thin", "2"]
ARTIFACTS = ["summary.csv", "diagnostics.csv", "plot_data.csv", "diagnostics.txt", "draws.csv",
             "manifest.json", "timing.json"]


@pytest.fixture
def series_csv(tmp_path):
    p = tmp_path / "data.csv"
    x = np.arange(1, 11)
    y = np.where(x <= 5, 8.0, 2.0) + np.sin(x)
    # shuffled rows must be sorted on read
    order = np.random.default_rng(0).permutation(10)
    p.write_text("x,y\n" + "".join(f"{x[i]},{y[i]:.6f}\n" for i in order))
    return p


def run(*argv):
    return main([str(a) for a in argv])


def test_fit_writes_all_artifacts(series_csv, tmp_path, capsys):
    out = tmp_path / "fit"
    assert run("fit", "--input", series_csv, "--prior", "laplace", "--zeta", "0.1", "--out", out,
               "--threads", "1", *SMALL) == 0
    for name in ARTIFACTS:
        assert (out / name).exists(), name
    man = json.loads((out / "manifest.json").read_text())
    assert man["zeta"]["source"] == "explicit" and man["model"]["prior"] == "laplace"
    assert len(man["data"]["sha256"]) == 64
    summ = np.loadtxt(out / "summary.csv", delimiter=",", skiprows=1)
    np.testing.assert_array_equal(summ[:, 0], np.arange(1, 11))
    assert "wrote" in capsys.readouterr().out


def test_draws_round_trip_and_diagnose(series_csv, tmp_path, capsys):
    out = tmp_path / "fit"
    assert run("fit", "--input", series_csv, "--out", out, "--threads", "1", *SMALL) == 0
    theta, scalars = read_draws(out / "draws.csv")
    assert theta.shape == (2, 30, 10) and set(scalars) == {"gamma", "sigma"}
    med = np.loadtxt(out / "summary.csv", delimiter=",", skiprows=1)[:, 1]
    np.testing.assert_allclose(np.quantile(theta.reshape(-1, 10), 0.5, axis=0), med, rtol=1e-12)
    capsys.readouterr()
    assert run("diagnose", out, "-q") == 0
    assert "max R-hat" in capsys.readouterr().out
    assert run("changepoint", out) == 0
    assert (out / "changepoint.csv").exists()


def test_config_file_and_env_overrides(series_csv, tmp_path, monkeypatch):
    cfgf = tmp_path / "cfg.json"
    cfgf.write_text(json.dumps({"input": str(series_csv), "prior": "normal", "zeta": 0.2,
                                "chains": 2, "warmup": 40, "iters": 40, "thin": 2}))
    monkeypatch.setenv("SPMRF_OUTPUT_DIR", str(tmp_path / "envout"))
    monkeypatch.setenv("SPMRF_THREADS", "1")
    assert run("fit", "--config", cfgf, "--seed", "4") == 0
    man = json.loads((tmp_path / "envout" / "manifest.json").read_text())
    assert man["config"]["seed"] == 4 and man["config"]["prior"] == "normal"
    assert "threads" not in man["config"]


def test_exit_codes(tmp_path, series_csv):
    assert run("fit", "--input", tmp_path / "missing.csv", "--out", tmp_path / "o") == 4
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n2,abc\n")
    assert run("fit", "--input", bad, "--out", tmp_path / "o") == 2
    assert run("fit", "--input", series_csv, "--zeta", "-1", "--out", tmp_path / "o") == 2
    assert run("fit", "--input", series_csv, "--dataset", "coal", "--out", tmp_path / "o") == 2
    assert run("fit", "--input", series_csv, "--obs", "poisson", "--out", tmp_path / "o") == 2
    assert run("simulate", "--replicates", "0", "--out", tmp_path / "s") == 2
    cfgf = tmp_path / "c.json"
    cfgf.write_text('{"nonsense": 1}')
    assert run("fit", "--config", cfgf) == 2


def test_horseshoe_marginal_rejected(series_csv, tmp_path):
    assert run("fit", "--input", series_csv, "--formulation", "marginal", "--out", tmp_path / "o",
               *SMALL) == 2


def test_calibrate_explicit_inputs(capsys, tmp_path):
    assert run("calibrate", "--U", "0.679", "--n", "366", "--order", "2", "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "zeta       5.894e-05" in out
    res = json.loads((tmp_path / "calibration.json").read_text())
    assert float(f"{res['zeta']:.3g}") == 5.89e-5
    assert run("calibrate", "--U", "1.0") == 2


def test_calibrate_coal(capsys):
    assert run("calibrate", "--dataset", "coal", "--obs", "poisson") == 0
    out = capsys.readouterr().out
    assert "0.01045" in out or "0.01046" in out


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "spmrf.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "spmrf" in r.stdout


def test_coal_dataset():
    s = load_coal()
    assert s.x[0] == 1851 and s.x[-1] == 1962 and s.y.sum() == 191
    years, counts = bin_by_year(coal_events(), 1851, 1962)
    np.testing.assert_array_equal(counts, s.y)
    with pytest.raises(ValueError):
        load_dataset("nope")


def test_tokyo_missing(monkeypatch, tmp_path):
    monkeypatch.setenv("SPMRF_DATA_DIR", str(tmp_path))
    with pytest.raises(FileNotFoundError):
        load_dataset("tokyo")
    (tmp_path / "tokyo_rain.csv").write_text("x,y,m\n1,3,39\n2,5,39\n")
    s = load_dataset("tokyo")
    np.testing.assert_array_equal(s.m, [39, 39])


def test_read_series_errors(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_series(p)
    p.write_text("x,y\n")
    with pytest.raises(ValueError):
        read_series(p)
    p.write_text("x,y\n1,inf\n")
    with pytest.raises(ValueError):
        read_series(p)

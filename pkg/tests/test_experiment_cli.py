import csv
import json

import numpy as np
import pytest

from nystrom_erm.cli import main
from nystrom_erm.data import write_libsvm
from nystrom_erm.experiment import (
    RESULT_COLUMNS,
    TIMING_COLUMNS,
    ExperimentConfig,
    fit_pipeline,
    load_config,
    load_data,
    run_experiment,
    run_single,
    sweep_heatmap,
    write_grid,
    write_results,
)
from nystrom_erm.errors import InvalidInputError
from nystrom_erm.kernel import KernelSpec
from nystrom_erm.model_io import load_model, save_model
from nystrom_erm.solver import LossSpec, predict
from nystrom_erm.synth import SynthSpec, generate

SYNTH = {"n": 600, "d": 10, "p": 0.5, "target_norm": 10.0, "noise": 0.05, "seed": 3, "n_test": 600}


def synth_cfg(**kw):
    base = dict(
        name="toy",
        synth=dict(SYNTH),
        kernel_family="gaussian",
        sigmas=[1.0],
        m_grid=[40],
        lambda_grid=[1e-3],
        epochs=5,
        repeats=1,
    )
    base.update(kw)
    return ExperimentConfig(**base).validate()


@pytest.fixture(scope="module")
def toy_data():
    return load_data(synth_cfg())


def strip_timing(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return [{k: v for k, v in r.items() if k not in TIMING_COLUMNS} for r in rows]


def test_single_cell_five_repeats(toy_data):
    cfg = synth_cfg(repeats=5)
    rows = run_experiment(cfg, toy_data)
    assert len(rows) == 1 and rows[0]["runs"] == 5 and rows[0]["status"] == "ok"
    errs = [
        run_single(cfg, *toy_data, 1.0, 1e-3, 40, [s, 0, 0, 0])["c_err"] for s in cfg.run_seeds
    ]
    assert rows[0]["c_err_mean"] == pytest.approx(np.mean(errs), abs=1e-15)
    assert rows[0]["c_err_std"] == pytest.approx(np.std(errs), abs=1e-15)


def test_single_repeat_has_zero_std(toy_data):
    row = run_experiment(synth_cfg(), toy_data)[0]
    assert row["c_err_std"] == 0.0 and row["runs"] == 1


def test_separable_synthetic_reaches_noise_level():
    cfg = synth_cfg(
        synth={"n": 3000, "d": 20, "p": 0.5, "target_norm": 20.0, "noise": 0.05, "margin": 1.0, "seed": 1,
               "n_test": 3000},
        kernel_family="linear",
        m_grid=[20],
        lambda_grid=[1e-4],
        epochs=20,
    )
    row = run_experiment(cfg)[0]
    assert row["c_err_mean"] <= 0.05 + 0.02


def test_determinism_and_workers(tmp_path, toy_data):
    cfg = synth_cfg(m_grid=[10, 40], lambda_grid=[1e-3, 1e-2], repeats=2)
    write_results(run_experiment(cfg, toy_data), tmp_path / "a.csv")
    write_results(run_experiment(cfg, toy_data), tmp_path / "b.csv")
    cfg.workers = 3
    write_results(run_experiment(cfg, toy_data), tmp_path / "c.csv")
    a = strip_timing(tmp_path / "a.csv")
    assert a == strip_timing(tmp_path / "b.csv") == strip_timing(tmp_path / "c.csv")
    assert list(a[0]) == [c for c in RESULT_COLUMNS if c not in TIMING_COLUMNS]


def test_cell_failure_recorded(toy_data):
    cfg = synth_cfg(lambda_grid=[0.0, 1e-3])
    rows = run_experiment(cfg, toy_data)
    assert rows[0]["status"].startswith("failed") and rows[0]["runs"] == 0
    assert np.isnan(rows[0]["c_err_mean"])
    assert rows[1]["status"] == "ok"


def test_heatmap_shape_and_trends(tmp_path):
    data = load_data(synth_cfg())
    lambdas = [1e4, 1e-2, 1e-3, 1e-4]
    ms = [2, 8, 32, 128]
    cfg = synth_cfg(lambda_grid=lambdas, m_grid=ms, sigmas=[2.0], repeats=2)
    mean, std, rows = sweep_heatmap(cfg, data)
    assert mean.shape == std.shape == (4, 4) and len(rows) == 16
    # over-regularized row: scores collapse towards 0 and error is worse than tuned lambda
    assert np.all(mean[0] > mean[1:].min(axis=0))
    cfg1 = synth_cfg(lambda_grid=[1e4], m_grid=[32], sigmas=[2.0])
    model = fit_pipeline(data[0], KernelSpec("gaussian", 2.0), LossSpec(), 1e4, 32, epochs=5)
    assert np.max(np.abs(predict(model, data[1].features))) <= 1e-2
    assert run_experiment(cfg1, data)[0]["c_err_mean"] >= mean[1:, 2].min()
    assert np.median(mean[1:, -1]) <= np.median(mean[1:, 0]) + 0.01
    write_grid(mean, lambdas, ms, tmp_path / "g.csv")
    lines = list(csv.reader(open(tmp_path / "g.csv")))
    assert len(lines) == 5 and all(len(row) == 5 for row in lines)


def test_heatmap_needs_two_by_two(toy_data):
    with pytest.raises(InvalidInputError):
        sweep_heatmap(synth_cfg(m_grid=[10]), toy_data)


def test_config_validation():
    with pytest.raises(InvalidInputError):
        synth_cfg(m_grid=[])
    with pytest.raises(InvalidInputError):
        synth_cfg(repeats=0)
    with pytest.raises(InvalidInputError):
        ExperimentConfig().validate()


def test_toml_config(tmp_path):
    (tmp_path / "c.toml").write_text(
        """
name = "t"
epochs = 3
repeats = 2
seeds = [7, 8]

[data]
train = "tr.svm"
test = "te.svm"
binarize = [2]

[kernel]
family = "gaussian"
sigma = [1.0, 2.0]

[sampling]
method = "uniform"

[grid]
m = [5, 10]
lambda = 0.01
"""
    )
    cfg = load_config(tmp_path / "c.toml")
    assert cfg.train_path == str(tmp_path / "tr.svm")
    assert cfg.sigmas == [1.0, 2.0] and cfg.m_grid == [5, 10] and cfg.lambda_grid == [0.01]
    assert cfg.run_seeds == [7, 8] and cfg.method == "uniform" and cfg.binarize == [2]


@pytest.mark.parametrize("suffix", [".npz", ".json"])
def test_model_roundtrip(tmp_path, toy_data, suffix):
    train, test = toy_data
    model = fit_pipeline(train, KernelSpec("gaussian", 1.0), LossSpec("logistic", 2.0), 1e-3, 30, epochs=3)
    save_model(model, tmp_path / f"m{suffix}")
    back = load_model(tmp_path / f"m{suffix}")
    np.testing.assert_array_equal(back.weights, model.weights)
    assert back.loss == model.loss and back.lam == model.lam
    np.testing.assert_array_equal(predict(back, test.features, clip=True), predict(model, test.features, clip=True))


def test_model_file_checked(tmp_path):
    (tmp_path / "x.json").write_text(json.dumps({"format": "other", "arrays": {}}))
    with pytest.raises(InvalidInputError):
        load_model(tmp_path / "x.json")


@pytest.fixture
def libsvm_files(tmp_path):
    ds, _ = generate(SynthSpec(n=400, d=6, target_norm=8.0, noise=0.02, seed=0))
    write_libsvm(ds.subset(np.arange(300)), tmp_path / "tr.svm")
    write_libsvm(ds.subset(np.arange(300, 400)), tmp_path / "te.svm")
    return tmp_path


def test_cli_train_eval(libsvm_files, capsys):
    d = libsvm_files
    rc = main(
        ["train", "--train", str(d / "tr.svm"), "--test", str(d / "te.svm"), "--sigma", "1.5", "--m", "30",
         "--lambda", "1e-3", "--model-out", str(d / "m.npz"), "--json-out", str(d / "t.json")]
    )
    assert rc == 0
    out = json.loads((d / "t.json").read_text())
    assert 0.0 <= out["c_err"] <= 0.2 and out["m_eff"] <= 30
    rc = main(["eval", "--model", str(d / "m.npz"), "--data", str(d / "te.svm"), "--json-out", str(d / "e.json")])
    assert rc == 0
    assert json.loads((d / "e.json").read_text())["c_err"] == pytest.approx(out["c_err"])
    capsys.readouterr()


def test_cli_sweep_and_heatmap(libsvm_files, capsys):
    d = libsvm_files
    (d / "s.toml").write_text(
        f"""
name = "cli"
epochs = 2
output_dir = "{d / 'out'}"
[data]
train = "tr.svm"
test = "te.svm"
[kernel]
sigma = 1.5
[grid]
m = [5, 20]
lambda = [1e-2, 1e-3]
"""
    )
    assert main(["sweep", str(d / "s.toml")]) == 0
    rows = list(csv.DictReader(open(d / "out" / "results.csv")))
    assert len(rows) == 4 and all(r["status"] == "ok" for r in rows)
    assert json.loads((d / "out" / "summary.json").read_text())["failed"] == 0
    assert main(["heatmap", str(d / "s.toml"), "--output-dir", str(d / "hm")]) == 0
    assert (d / "hm" / "heatmap_mean.csv").exists() and (d / "hm" / "heatmap_std.csv").exists()
    capsys.readouterr()


def test_cli_sweep_failure_exit_code(libsvm_files, capsys):
    d = libsvm_files
    (d / "bad.toml").write_text(
        f"""
output_dir = "{d / 'bad'}"
[data]
train = "tr.svm"
[grid]
m = [5]
lambda = [0.0]
"""
    )
    assert main(["sweep", str(d / "bad.toml")]) == 1
    capsys.readouterr()


def test_cli_diagnose(libsvm_files, capsys):
    d = libsvm_files
    rc = main(
        ["diagnose", "--data", str(d / "tr.svm"), "--sigma", "2", "--alpha", "1e-3,1e-2", "--m", "20",
         "--out-dir", str(d / "diag"), "--scores-out", str(d / "scores.csv")]
    )
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert len(summary["rows"]) == 2 and summary["rows"][0]["residual"] is not None
    assert (d / "diag" / "diagnostics.csv").exists()
    assert (d / "scores.csv").read_text().startswith("index,score")


def test_cli_synth(tmp_path, capsys):
    rc = main(["synth", "--n", "50", "--d", "4", "--hard-margin", "--out", str(tmp_path / "s.svm"),
               "--csv", str(tmp_path / "s.csv"), "--target-out", str(tmp_path / "w.txt")])
    assert rc == 0
    from nystrom_erm.data import load_libsvm
    ds = load_libsvm(tmp_path / "s.svm", dim=4)
    w = np.loadtxt(tmp_path / "w.txt")
    assert ds.n == 50 and np.all(np.abs(ds.features @ w) >= 0.1 - 1e-12)
    capsys.readouterr()


def test_cli_bad_input_exit_code(tmp_path, capsys):
    assert main(["train", "--train", str(tmp_path / "missing.svm")]) == 2
    (tmp_path / "bad.svm").write_text("+1 1:1\n-1 x\n")
    assert main(["train", "--train", str(tmp_path / "bad.svm")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_bundled_configs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    paths = sorted(root.glob("*.toml"))
    assert len(paths) == 13
    for path in paths:
        cfg = load_config(path)
        assert cfg.repeats >= 1 and cfg.m_grid and cfg.lambda_grid

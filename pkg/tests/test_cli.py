import json
import os

import numpy as np
import pytest

from sida.cli import run


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


@pytest.fixture
def sim_dir(tmp_path):
    out = tmp_path / "sim"
    rc = run([
        "simulate", "--scenario", "S1", "--setting", "1", "--dims", "60,60",
        "--n-per-class", "30", "--seed", "7", "--out", str(out),
    ])
    assert rc == 0
    return out


@pytest.fixture(scope="module")
def sim_dir_full(tmp_path_factory):
    # full benchmark scale for the pipeline quality thresholds
    out = tmp_path_factory.mktemp("simfull") / "sim"
    rc = run([
        "simulate", "--scenario", "S1", "--setting", "1", "--dims", "300,300",
        "--n-per-class", "80", "--seed", "7", "--out", str(out),
    ])
    assert rc == 0
    return out


def views_arg(d, part="train"):
    return f"{d}/view1_{part}.csv,{d}/view2_{part}.csv"


def test_simulate_outputs_and_determinism(sim_dir, tmp_path):
    names = sorted(os.listdir(sim_dir))
    assert "view1_train.csv" in names and "labels_test.csv" in names
    assert "truth1.csv" in names and "manifest.json" in names
    out2 = tmp_path / "sim2"
    rc = run([
        "simulate", "--scenario", "S1", "--setting", "1", "--dims", "60,60",
        "--n-per-class", "30", "--seed", "7", "--out", str(out2),
    ])
    assert rc == 0
    for name in names:
        assert read(sim_dir / name) == read(out2 / name), name


def test_simulate_net_emits_graphs(tmp_path):
    out = tmp_path / "net"
    rc = run(["simulate", "--scenario", "NET1", "--dims", "40,40,40",
              "--n-per-class", "10", "--seed", "1", "--out", str(out)])
    assert rc == 0
    assert (out / "graph3.tsv").exists()


def test_full_pipeline_and_training_error_consistency(sim_dir_full, tmp_path):
    d = str(sim_dir_full)
    cvdir = tmp_path / "cv"
    rc = run([
        "cv", "--views", views_arg(d), "--labels", f"{d}/labels_train.csv",
        "--seed", "3", "--out", str(cvdir),
    ])
    assert rc == 0
    assert (cvdir / "cv_report.csv").exists()
    chosen = json.loads((cvdir / "chosen.json").read_text())
    assert len(chosen["best_taus"]) == 2

    model = tmp_path / "model.json"
    rc = run([
        "fit", "--views", views_arg(d), "--labels", f"{d}/labels_train.csv",
        "--taus-from", str(cvdir / "chosen.json"), "--seed", "3", "--out", str(model),
    ])
    assert rc == 0

    # evaluate on the held-out draw with ground truth
    report = tmp_path / "report.json"
    rc = run([
        "evaluate", "--model", str(model), "--views", views_arg(d, "test"),
        "--labels", f"{d}/labels_test.csv",
        "--truth", f"{d}/truth1.csv,{d}/truth2.csv", "--out", str(report),
    ])
    assert rc == 0
    rep = json.loads(report.read_text())
    assert rep["error_rate"] <= 0.02
    assert rep["rho_hat"] >= 0.9

    # predict on training data reproduces the training-error figure exactly
    preds = tmp_path / "preds.csv"
    rc = run(["predict", "--model", str(model), "--views", views_arg(d),
              "--separate", "--out", str(preds)])
    assert rc == 0
    lines = [ln for ln in preds.read_text().splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    assert header == ["sample", "pooled", "separate_1", "separate_2"]
    labels = np.loadtxt(f"{d}/labels_train.csv", skiprows=1, dtype=int)
    pooled = np.array([int(ln.split(",")[1]) for ln in lines[1:]])
    pred_err = (pooled != labels).mean()

    train_report = tmp_path / "train_report.json"
    rc = run([
        "evaluate", "--model", str(model), "--views", views_arg(d),
        "--labels", f"{d}/labels_train.csv", "--out", str(train_report),
    ])
    assert rc == 0
    train_rep = json.loads(train_report.read_text())
    assert train_rep["error_rate"] == pytest.approx(pred_err, abs=0)

    # byte-determinism of cv/fit/predict re-runs
    cvdir2 = tmp_path / "cv2"
    run(["cv", "--views", views_arg(d), "--labels", f"{d}/labels_train.csv",
         "--seed", "3", "--out", str(cvdir2)])
    assert read(cvdir / "cv_report.csv") == read(cvdir2 / "cv_report.csv")
    model2 = tmp_path / "model2.json"
    run(["fit", "--views", views_arg(d), "--labels", f"{d}/labels_train.csv",
         "--taus-from", str(cvdir / "chosen.json"), "--seed", "3", "--out", str(model2)])
    assert read(model) == read(model2)


def test_fit_tau_too_large_exit_code(sim_dir, tmp_path):
    d = str(sim_dir)
    model = tmp_path / "model.json"
    rc = run([
        "fit", "--views", views_arg(d), "--labels", f"{d}/labels_train.csv",
        "--taus", "1e9,1e9", "--out", str(model),
    ])
    assert rc == 3
    assert not model.exists()  # partial outputs removed


def test_missing_labels_is_validation_error(sim_dir, tmp_path):
    d = str(sim_dir)
    rc = run(["cv", "--views", views_arg(d), "--out", str(tmp_path / "x")])
    assert rc == 2


def test_missing_view_file_is_validation_error(tmp_path):
    rc = run(["cv", "--views", "nope1.csv,nope2.csv", "--labels", "nope.csv",
              "--out", str(tmp_path)])
    assert rc == 2


def test_view_count_mismatch_is_validation_error(sim_dir, tmp_path):
    d = str(sim_dir)
    rc = run([
        "fit", "--views", views_arg(d), "--labels", f"{d}/labels_train.csv",
        "--method", "sida,sida,sida", "--taus", "1,1",
        "--out", str(tmp_path / "m.json"),
    ])
    assert rc == 2


def test_config_file_and_env_precedence(sim_dir, tmp_path, monkeypatch):
    d = str(sim_dir)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"taus": "0.0,0.0", "seed": 11}))
    model = tmp_path / "m.json"
    monkeypatch.setenv("SIDA_SEED", "99")
    rc = run([
        "fit", "--config", str(cfg), "--views", views_arg(d),
        "--labels", f"{d}/labels_train.csv", "--out", str(model),
    ])
    assert rc == 0
    doc = json.loads(model.read_text())
    # config file beats environment
    assert doc["manifest"]["config"]["seed"] == 11
    # flag beats config file
    model2 = tmp_path / "m2.json"
    rc = run([
        "fit", "--config", str(cfg), "--views", views_arg(d),
        "--labels", f"{d}/labels_train.csv", "--seed", "5", "--out", str(model2),
    ])
    assert rc == 0
    assert json.loads(model2.read_text())["manifest"]["config"]["seed"] == 5


def test_env_used_when_nothing_else(sim_dir, tmp_path, monkeypatch):
    d = str(sim_dir)
    monkeypatch.setenv("SIDA_SEED", "42")
    model = tmp_path / "m.json"
    rc = run(["fit", "--views", views_arg(d), "--labels", f"{d}/labels_train.csv",
              "--taus", "0.0,0.0", "--out", str(model)])
    assert rc == 0
    assert json.loads(model.read_text())["manifest"]["config"]["seed"] == 42


def test_network_pipeline_through_cli(tmp_path):
    sim = tmp_path / "net"
    rc = run(["simulate", "--scenario", "NET1", "--dims", "40,40,40",
              "--n-per-class", "15", "--seed", "3", "--out", str(sim)])
    assert rc == 0
    views = ",".join(f"{sim}/view{d}_train.csv" for d in (1, 2, 3))
    graphs = ",".join(f"{sim}/graph{d}.tsv" for d in (1, 2, 3))
    labels = f"{sim}/labels_train.csv"
    cv = tmp_path / "cv"
    rc = run(["cv", "--views", views, "--labels", labels, "--graphs", graphs,
              "--method", "sidanet,sidanet,sidanet", "--grid-points", "2",
              "--random-frac", "0.5", "--folds", "3", "--seed", "1",
              "--out", str(cv)])
    assert rc == 0
    model = tmp_path / "model.json"
    rc = run(["fit", "--views", views, "--labels", labels, "--graphs", graphs,
              "--taus-from", str(cv / "chosen.json"), "--out", str(model)])
    assert rc == 0
    doc = json.loads(model.read_text())
    assert doc["config"]["methods"] == ["sidanet", "sidanet", "sidanet"]


def test_stability_command(sim_dir, tmp_path):
    d = str(sim_dir)
    out = tmp_path / "stable.csv"
    rc = run([
        "stability", "--views", views_arg(d), "--labels", f"{d}/labels_train.csv",
        "--reps", "3", "--grid-points", "3", "--random-frac", "0.4",
        "--folds", "3", "--effect-percentile", "0.2", "--seed", "1",
        "--out", str(out),
    ])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# manifest:")
    assert lines[1] == "view,index,name,frequency,mean_effect"
    assert len(lines) > 2
    out2 = tmp_path / "stable2.csv"
    rc = run([
        "stability", "--views", views_arg(d), "--labels", f"{d}/labels_train.csv",
        "--reps", "3", "--grid-points", "3", "--random-frac", "0.4",
        "--folds", "3", "--effect-percentile", "0.2", "--seed", "1",
        "--out", str(out2),
    ])
    assert read(out) == read(out2)

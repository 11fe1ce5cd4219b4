import csv
import hashlib
import json

import numpy as np
import pytest

from qtn.cli import RunConfig, main
from qtn.errors import ConfigError
from qtn.experiments import METHODS, BenchmarkConfig, matched_qtkm_rank
from qtn.features import FeatureSpec

from .helpers import smooth_regression


@pytest.fixture
def csv_data(tmp_path):
    X, y = smooth_regression(80, 3, seed=0)
    X = 10 * X - 3  # raw units; the CLI scales to the unit box
    p = tmp_path / "data.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["a", "b", "c", "target"])
        for row, t in zip(X, y):
            w.writerow([*map(repr, row.tolist()), repr(float(t))])
    return p


def config(tmp_path, text, name="run.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


TRAIN = """\
data: data.csv
kind: fourier
M: 8
Q: 2
L: 2.0
rank: 3
lambda: 1.0e-4
max_epochs: 5
seed: 1
split_seed: 0
"""


def test_train_predict_eval_roundtrip(tmp_path, csv_data):
    cfg = config(tmp_path, TRAIN)
    out = tmp_path / "m"
    assert main(["train", "--config", cfg, "--out", str(out)]) == 0
    for f in ("model.qtnw", "report.jsonl", "model.json"):
        assert (out / f).exists()
    assert len((out / "report.jsonl").read_text().splitlines()) == 5 * 9
    meta = json.loads((out / "model.json").read_text())
    assert meta["features"]["M"] == [8, 8, 8]

    pcfg = config(tmp_path, "data: data.csv\nmodel: m\n", "pred.yaml")
    assert main(["predict", "--config", pcfg, "--out", str(tmp_path / "p")]) == 0
    rows = (tmp_path / "p" / "predictions.csv").read_text().splitlines()
    assert rows[0] == "prediction" and len(rows) == 81
    assert main(["eval", "--config", pcfg, "--out", str(tmp_path / "e")]) == 0
    res = json.loads((tmp_path / "e" / "metrics.json").read_text())
    assert np.isfinite(res["MSE"]) and set(res) == {"MSE", "MAE", "SMAE", "SMAE_defined"}


def test_train_rerun_identical_model_bytes(tmp_path, csv_data):
    cfg = config(tmp_path, TRAIN)
    main(["train", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["train", "--config", cfg, "--out", str(tmp_path / "b")])
    assert sha(tmp_path / "a" / "model.qtnw") == sha(tmp_path / "b" / "model.qtnw")
    assert sha(tmp_path / "a" / "model.json") == sha(tmp_path / "b" / "model.json")


def test_invalid_M_exit_code_and_message(tmp_path, csv_data, capsys):
    cfg = config(tmp_path, TRAIN.replace("M: 8", "M: 12"))
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
    assert "M_d=12" in capsys.readouterr().err


def test_exit_codes_for_data_and_config_problems(tmp_path, csv_data):
    assert main(["train", "--config", str(tmp_path / "nope.yaml")]) == 2
    cfg = config(tmp_path, TRAIN.replace("data.csv", "missing.csv"))
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "x")]) == 3
    cfg = config(tmp_path, TRAIN.replace("max_epochs: 5", "max_epochs: 0"))
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
    cfg = config(tmp_path, TRAIN.replace("M: 8", "M: [8, 8]"))
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "x")]) == 2


def test_cv_writes_choice(tmp_path, csv_data):
    cfg = config(tmp_path, TRAIN + "lambda_grid: [1.0e-4, 1.0e-2]\nL_grid: [1.5, 4.0]\n")
    assert main(["cv", "--config", cfg, "--out", str(tmp_path / "cv")]) == 0
    res = json.loads((tmp_path / "cv" / "cv.json").read_text())
    assert res["lambda_grid"] == [1e-4, 1e-2] and res["L_grid"] == [1.5, 4.0]
    assert len(res["table"]) == 4
    assert res["lambda"] in (1e-4, 1e-2) and res["L"] in (1.5, 4.0)
    first = (tmp_path / "cv" / "best.yaml").read_text()
    main(["cv", "--config", cfg, "--out", str(tmp_path / "cv2")])
    assert (tmp_path / "cv2" / "best.yaml").read_text() == first


def test_spectrum_synthetic(tmp_path):
    cfg = config(
        tmp_path,
        "M: 64\nranks: [2, 4]\nmax_epochs: 5\nlambda: 0.0\nnum_samples: 300\n"
        "peaks: [[5, 1.0, 0.0], [12, 0.5, 1.0]]\nnoise_sd: 0.1\n",
    )
    out = tmp_path / "s"
    assert main(["spectrum", "--config", cfg, "--out", str(out)]) == 0
    for f in ("spectrum_dense.csv", "spectrum_R2.csv", "spectrum_R4.csv", "spectrum_report.json"):
        assert (out / f).exists()
    rep = json.loads((out / "spectrum_report.json").read_text())
    assert [r["P"] for r in rep["ranks"]] == [24, 48]
    assert all(r["monotone"] for r in rep["ranks"])


def test_spectrum_requires_source(tmp_path):
    assert main(["spectrum", "--config", config(tmp_path, "M: 64\n"), "--out", str(tmp_path)]) == 2


def test_budget_matching_arithmetic():
    assert matched_qtkm_rank(2, FeatureSpec("fourier", (16,) * 6, 2)) == 4
    assert matched_qtkm_rank(6, FeatureSpec("fourier", (16,) * 6, 2)) == 12
    # rounds down: 3 * (8 + 4) / (2 * (3 + 2)) = 3.6
    assert matched_qtkm_rank(3, FeatureSpec("fourier", (8, 4), 2)) == 3


def test_benchmark_config_rejects_empty_seeds_and_unknown_methods():
    with pytest.raises(ConfigError):
        BenchmarkConfig(seeds=[])
    with pytest.raises(ConfigError):
        BenchmarkConfig(methods=["SVM"])


def test_benchmark_rows(tmp_path, csv_data):
    cfg = config(
        tmp_path,
        "data: data.csv\nM: 4\ntkm_ranks: [1, 2]\nseeds: [0, 1]\nmax_epochs: 3\n"
        "lambda_grid: [1.0e-3]\nL_grid: [2.0]\nrff_lengthscale_grid: [0.5]\n",
    )
    out = tmp_path / "b"
    assert main(["benchmark", "--config", cfg, "--out", str(out)]) == 0
    with open(out / "benchmark.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(METHODS) * 2
    runs = json.loads((out / "benchmark_runs.json").read_text())
    assert len(runs) == len(METHODS) * 2 * 2
    tkm = [r for r in rows if r["method"] == "TKM"]
    qtkm = [r for r in rows if r["method"] == "QTKM"]
    for t, q in zip(tkm, qtkm):
        assert int(q["P"]) <= int(t["P"])
    assert all(int(r["n_failed"]) == 0 for r in rows)


def test_run_config_sections(tmp_path):
    cfg = RunConfig.load(config(tmp_path, TRAIN))
    assert cfg.train == {"rank": 3, "lam": 1e-4, "max_epochs": 5, "seed": 1}
    assert cfg.feature_spec(2).M == (8, 8)
    assert cfg.path("data") == tmp_path / "data.csv"
    with pytest.raises(ConfigError):
        cfg.path("model")


def test_unknown_command_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["fly", "--config", "x"])
    assert e.value.code == 2

"""Command line entry point: ``qtn train|predict|eval|cv|spectrum|benchmark --config FILE``.

All numerics live in the config file (flat YAML: ``key: value``, lists as
``[a, b]``). Flags only select the command and paths. Exit codes: 0 success,
2 config error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from . import baselines
from .data import Dataset, Scaler, load_table, metrics, split, standardize_targets, synth_signal, write_spectrum_csv
from .errors import ConfigError, DataError, NumericalError
from .experiments import BenchmarkConfig, SpectrumConfig, run_benchmark, run_spectrum
from .features import FeatureSpec
from .solver import TrainConfig, als_train, predict
from .tensors import load_weights, save_weights

log = logging.getLogger("qtn")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

FEATURE_KEYS = ("kind", "M", "Q", "L", "frequency_shift")
TRAIN_KEYS = {"rank": "rank", "lambda": "lam", "max_epochs": "max_epochs", "rel_tol": "rel_tol",
              "seed": "seed", "init_scale": "init_scale"}


@dataclass
class RunConfig:
    """Parsed config file; paths are resolved relative to the config's directory."""

    raw: dict
    base_dir: Path
    features: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        try:
            raw = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"config {path} is not valid key-value text: {e}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"config {path} must be a flat key-value mapping")
        cfg = cls(raw, Path(path).resolve().parent)
        for k, v in raw.items():
            if k in FEATURE_KEYS:
                cfg.features[k] = v
            elif k in TRAIN_KEYS:
                cfg.train[TRAIN_KEYS[k]] = v
            else:
                cfg.options[k] = v
        return cfg

    def path(self, key, required=True):
        v = self.options.get(key)
        if v is None:
            if required:
                raise ConfigError(f"config is missing {key!r}")
            return None
        p = Path(v)
        return p if p.is_absolute() else self.base_dir / p

    def feature_spec(self, D: int) -> FeatureSpec:
        d = dict(self.features)
        d.setdefault("kind", "fourier")
        if "M" not in d:
            raise ConfigError("config is missing 'M'")
        if isinstance(d["M"], int):
            d["M"] = [d["M"]] * D
        if len(d["M"]) != D:
            raise ConfigError(f"M has {len(d['M'])} entries but the data has {D} input columns")
        return FeatureSpec.from_dict(d)

    def train_config(self) -> TrainConfig:
        try:
            return TrainConfig(**self.train)
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"bad training settings: {e}") from None

    def section(self, cls, rename=None):
        """Build a dataclass from matching option keys (with optional renames)."""
        rename = rename or {}
        names = {f.name for f in fields(cls)}
        kw = {}
        for k, v in {**self.options, **self.features, **self.raw}.items():
            k2 = rename.get(k, k)
            if k2 in names:
                kw[k2] = v
        try:
            return cls(**kw)
        except TypeError as e:
            raise ConfigError(f"bad settings for {cls.__name__}: {e}") from None


def _read_dataset(cfg: RunConfig, key="data") -> Dataset:
    path = cfg.path(key)
    X, y, names = load_table(path, cfg.options.get("target"))
    return Dataset(X, y, None, {"source": str(path), "columns": names})


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _split_and_scale(cfg: RunConfig, ds: Dataset):
    train, test = split(ds, float(cfg.options.get("train_fraction", 0.8)), int(cfg.options.get("split_seed", 0)))
    mu, sd = 0.0, 1.0
    if cfg.options.get("standardize", True):
        mu, sd, (train, test) = standardize_targets(train, test)
    return train, test, mu, sd


def cmd_train(cfg: RunConfig, out: Path) -> int:
    ds = _read_dataset(cfg)
    train, test, mu, sd = _split_and_scale(cfg, ds)
    spec = cfg.feature_spec(train.X.shape[1])
    tc = cfg.train_config()
    weights, report = als_train(train.X, train.y, spec, tc)
    save_weights(weights, out / "model.qtnw")
    (out / "report.jsonl").write_text(report.to_jsonl())
    res = {
        "train": metrics(train.y, predict(weights, train.X, spec), 0.0),
        "test": metrics(test.y, predict(weights, test.X, spec), 0.0),
    }
    meta = {
        "features": spec.to_dict(),
        "train_config": {k: getattr(tc, k) for k in ("rank", "lam", "max_epochs", "rel_tol", "seed", "init_scale")},
        "scaler": train.scaler.to_dict(),
        "target_mean": mu,
        "target_sd": sd,
        "epochs": report.epoch_count,
        "final_objective": report.final_objective,
        "max_imag_train": report.max_imag,
        "metrics_standardized": res,
    }
    _write_json(out / "model.json", meta)
    print(f"train MSE {res['train']['MSE']:.6g}  test MSE {res['test']['MSE']:.6g}  (standardized targets)")
    return EXIT_OK


def _load_model(cfg: RunConfig):
    mdir = cfg.path("model")
    try:
        meta = json.loads((mdir / "model.json").read_text())
        weights = load_weights(mdir / "model.qtnw")
    except OSError as e:
        raise DataError(f"cannot load model from {mdir}: {e}") from None
    return weights, FeatureSpec.from_dict(meta["features"]), Scaler.from_dict(meta["scaler"]), meta


def _model_predictions(cfg: RunConfig):
    weights, spec, scaler, meta = _load_model(cfg)
    ds = _read_dataset(cfg)
    Xs = scaler.transform(ds.X)
    if spec.kind == "polynomial":
        Xs = np.clip(Xs, -1.0, 1.0)
    yhat = predict(weights, Xs, spec) * meta["target_sd"] + meta["target_mean"]
    return ds, yhat, meta


def cmd_predict(cfg: RunConfig, out: Path) -> int:
    _, yhat, _ = _model_predictions(cfg)
    with open(out / "predictions.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["prediction"])
        for v in yhat:
            w.writerow([repr(float(v))])
    print(f"wrote {len(yhat)} predictions to {out / 'predictions.csv'}")
    return EXIT_OK


def cmd_eval(cfg: RunConfig, out: Path) -> int:
    ds, yhat, meta = _model_predictions(cfg)
    res = metrics(ds.y, yhat, meta["target_mean"])
    _write_json(out / "metrics.json", res)
    print(json.dumps(res))
    return EXIT_OK


def cmd_cv(cfg: RunConfig, out: Path) -> int:
    ds = _read_dataset(cfg)
    train, _, _, _ = _split_and_scale(cfg, ds)
    spec = cfg.feature_spec(train.X.shape[1]).replace(Q="none")
    lam_grid = cfg.options.get("lambda_grid")
    L_grid = cfg.options.get("L_grid")
    if not lam_grid or not L_grid:
        raise ConfigError("cv needs non-empty 'lambda_grid' and 'L_grid'")
    lam, L, table = baselines.cross_validate(
        train.X, train.y, lam_grid, L_grid, spec, int(cfg.options.get("folds", 3)), int(cfg.options.get("cv_seed", 0))
    )
    _write_json(out / "cv.json", {"lambda_grid": lam_grid, "L_grid": L_grid, "table": table, "lambda": lam, "L": L})
    (out / "best.yaml").write_text(yaml.safe_dump({"lambda": lam, "L": L}))
    print(f"best lambda={lam!r} L={L!r}")
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, out: Path) -> int:
    sc = cfg.section(SpectrumConfig, rename={"lambda": "lam"})
    peaks = None
    if cfg.options.get("data"):
        ds = _read_dataset(cfg)
        train, test, _, _ = _split_and_scale(cfg, ds)
    else:
        peaks = cfg.options.get("peaks")
        if not peaks:
            raise ConfigError("spectrum needs either 'data' or synthetic 'peaks'")
        ds = synth_signal(int(cfg.options.get("num_samples", 4096)), peaks, float(cfg.options.get("noise_sd", 0.0)),
                          int(cfg.options.get("signal_seed", 0)))
        train, test = ds, None
    res = run_spectrum(train, sc, test, peaks)
    write_spectrum_csv(out / "spectrum_dense.csv", res["dense"])
    for R, sp in res["spectra"].items():
        write_spectrum_csv(out / f"spectrum_R{R}.csv", sp)
    _write_json(out / "spectrum_report.json", {"M": sc.M, "ranks": res["ranks"]})
    for row in res["ranks"]:
        print(f"R={row['R']:4d} P={row['P']:6d} M/P={row['ratio']:5.1f} rel_err={row['rel_weight_error']:.3f}")
    return EXIT_OK


def cmd_benchmark(cfg: RunConfig, out: Path) -> int:
    bc = cfg.section(BenchmarkConfig)
    ds = _read_dataset(cfg)
    runs, summary = run_benchmark(ds, bc)
    _write_json(out / "benchmark_runs.json", runs)
    cols = ["method", "tkm_rank", "M", "R", "P", "mse_mean", "mse_sd", "n_ok", "n_failed"]
    with open(out / "benchmark.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(summary)
    for row in summary:
        print(f"{row['method']:5s} P={row['P']!s:>6s} MSE {row['mse_mean']:.4f} +- {row['mse_sd']:.4f}")
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "cv": cmd_cv,
    "spectrum": cmd_spectrum,
    "benchmark": cmd_benchmark,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qtn", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="key-value config file")
    parser.add_argument("--out", default=".", help="output directory (created if missing)")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config)
        out = Path(args.out)
        os.makedirs(out, exist_ok=True)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as e:
        print(f"qtn: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, ValueError) as e:
        print(f"qtn: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as e:
        print(f"qtn: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

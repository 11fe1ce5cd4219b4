"""Experiment drivers: matched-budget generalization benchmark and spectrum recovery.

Shared by the CLI, the scripts in ``scripts/`` and the acceptance tests.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import baselines
from .data import (
    Dataset,
    dense_spectrum,
    metrics,
    relative_error,
    spectrum_extract,
    split,
    standardize_targets,
    top_bins,
)
from .errors import ConfigError
from .features import FeatureSpec, feature_blocks
from .solver import TrainConfig, als_train, predict
from .tensors import NetworkShape, compression_ratio, cpd_reconstruct, param_count

log = logging.getLogger(__name__)

METHODS = ("QTKM", "TKM", "RFF", "KRR")


def matched_qtkm_rank(tkm_rank: int, spec: FeatureSpec) -> int:
    """Largest QTKM rank whose parameter count does not exceed the TKM budget."""
    R = (tkm_rank * sum(spec.M)) // (spec.Q * sum(spec.K))
    if R < 1:
        raise ConfigError(f"TKM rank {tkm_rank} leaves no budget for a rank-1 quantized model")
    return R


@dataclass
class BenchmarkConfig:
    M: int = 16
    Q: int = 2
    tkm_ranks: list = field(default_factory=lambda: [2, 4, 6])
    seeds: list = field(default_factory=lambda: list(range(10)))
    methods: list = field(default_factory=lambda: list(METHODS))
    train_fraction: float = 0.8
    lambda_grid: list = field(default_factory=lambda: [1e-6, 1e-4, 1e-2, 1e-1, 1.0, 10.0])
    L_grid: list = field(default_factory=lambda: [1.5, 2.0, 4.0, 8.0])
    rff_lengthscale_grid: list = field(default_factory=lambda: [0.1, 0.2, 0.5, 1.0, 2.0])
    folds: int = 3
    max_epochs: int = 200
    rel_tol: float = 0.0
    krr_max_n: int = baselines.KRR_MAX_N

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("benchmark needs at least one seed")
        if not self.tkm_ranks:
            raise ConfigError("benchmark needs at least one TKM rank")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {METHODS}")


def _run_one_seed(dataset: Dataset, cfg: BenchmarkConfig, seed: int):
    train, test = split(dataset, cfg.train_fraction, seed)
    _, _, (train, test) = standardize_targets(train, test)
    D = train.X.shape[1]
    base = FeatureSpec("fourier", (cfg.M,) * D, cfg.Q, 1.0)
    lam, L, _ = baselines.cross_validate(train.X, train.y, cfg.lambda_grid, cfg.L_grid, base.replace(Q="none"), cfg.folds, seed)
    qspec = base.replace(L=L)
    dspec = qspec.replace(Q="none")
    out = []

    def mse(pred):
        return float(np.mean((pred - test.y) ** 2))

    krr_mse = None
    if "KRR" in cfg.methods:
        try:
            model = baselines.krr_fit(train.X, train.y, lam, dspec, max_n=cfg.krr_max_n)
            krr_mse = mse(baselines.krr_predict(model, test.X))
        except Exception as e:  # recorded, run continues
            log.warning("KRR failed for seed %d: %s", seed, e)
            krr_mse = e
    rff_ls = rff_lam = None
    for R in cfg.tkm_ranks:
        budget = param_count(NetworkShape.for_features(dspec, R))
        for method in cfg.methods:
            row = {"seed": seed, "tkm_rank": R, "method": method, "M": cfg.M, "lambda": lam, "L": L}
            try:
                if method == "TKM":
                    tc = TrainConfig(rank=R, lam=lam, max_epochs=cfg.max_epochs, rel_tol=cfg.rel_tol, seed=seed)
                    w, _ = als_train(train.X, train.y, dspec, tc)
                    row.update(R=R, P=budget, mse=mse(predict(w, test.X, dspec)))
                elif method == "QTKM":
                    Rq = matched_qtkm_rank(R, qspec)
                    tc = TrainConfig(rank=Rq, lam=lam, max_epochs=cfg.max_epochs, rel_tol=cfg.rel_tol, seed=seed)
                    w, _ = als_train(train.X, train.y, qspec, tc)
                    row.update(R=Rq, P=param_count(NetworkShape.for_features(qspec, Rq)), mse=mse(predict(w, test.X, qspec)))
                elif method == "RFF":
                    if rff_ls is None:
                        rff_ls, rff_lam = baselines.cross_validate_rff_joint(
                            train.X, train.y, cfg.rff_lengthscale_grid, cfg.lambda_grid, budget, cfg.folds, seed
                        )
                    m = baselines.rff_fit(train.X, train.y, budget, rff_ls, rff_lam, seed)
                    row.update(R=None, P=budget, lengthscale=rff_ls, mse=mse(m.predict(test.X)))
                    row["lambda"] = rff_lam
                elif method == "KRR":
                    if isinstance(krr_mse, Exception):
                        raise krr_mse
                    row.update(R=None, P=train.X.shape[0], mse=krr_mse)
            except Exception as e:
                row.update(error=f"{type(e).__name__}: {e}", mse=float("nan"))
            out.append(row)
    return out


def run_benchmark(dataset: Dataset, cfg: BenchmarkConfig):
    """Per-seed rows and a summary table with one row per (method, budget point)."""
    runs = []
    for seed in cfg.seeds:
        runs.extend(_run_one_seed(dataset, cfg, seed))
    summary = []
    for R in cfg.tkm_ranks:
        for method in cfg.methods:
            rows = [r for r in runs if r["tkm_rank"] == R and r["method"] == method]
            vals = np.array([r["mse"] for r in rows if math.isfinite(r["mse"])])
            summary.append(
                {
                    "method": method,
                    "tkm_rank": R,
                    "M": cfg.M,
                    "R": rows[0].get("R") if rows else None,
                    "P": rows[0].get("P") if rows else None,
                    "mse_mean": float(vals.mean()) if vals.size else float("nan"),
                    "mse_sd": float(vals.std()) if vals.size else float("nan"),
                    "n_ok": int(vals.size),
                    "n_failed": len(rows) - int(vals.size),
                }
            )
    return runs, summary


@dataclass
class SpectrumConfig:
    M: int = 1024
    Q: int = 2
    L: float = 1.0
    frequency_shift: int = 0
    ranks: list = field(default_factory=lambda: [10, 25, 50, 100])
    lam: float = 0.0
    max_epochs: int = 50
    seed: int = 0
    top_k: int = 3


def dense_solution(X, y, spec: FeatureSpec, lam: float = 0.0) -> np.ndarray:
    """Unconstrained weights of the same objective (minimum-norm when ``lam == 0``)."""
    Z = feature_blocks(X, spec.replace(Q="none"))[0].conj()
    if lam == 0:
        return np.linalg.lstsq(Z, np.asarray(y, dtype=complex), rcond=None)[0]
    return baselines.ridge_fit(Z, y, lam)


def run_spectrum(train: Dataset, cfg: SpectrumConfig, test: Dataset | None = None, peaks=None):
    """Fit a 1-D quantized Fourier model per rank; compare against the dense solution."""
    spec = FeatureSpec("fourier", (cfg.M,), cfg.Q, cfg.L, cfg.frequency_shift)
    w_dense = dense_solution(train.X, train.y, spec, cfg.lam)
    result = {"dense": dense_spectrum(w_dense, spec), "ranks": []}
    true_top = None
    if peaks:
        true_top = max(peaks, key=lambda p: abs(p[1]))[0]
    for R in cfg.ranks:
        tc = TrainConfig(rank=R, lam=cfg.lam, max_epochs=cfg.max_epochs, seed=cfg.seed)
        w, report = als_train(train.X, train.y, spec, tc)
        P = param_count(NetworkShape.for_features(spec, R))
        spectrum = spectrum_extract(w, spec)
        row = {
            "R": R,
            "P": P,
            "ratio": compression_ratio(cfg.M, P),
            "rel_weight_error": relative_error(w_dense, cpd_reconstruct(w)),
            "final_objective": report.final_objective,
            "monotone": bool(np.all(np.diff(report.objective_history) <= 1e-9 * np.abs(report.objective_history[:-1]))),
            "top_bins": top_bins(spectrum, cfg.top_k),
        }
        if true_top is not None:
            row["top_peak_recovered"] = any(abs(abs(f) - true_top) < 1e-9 for f, _ in row["top_bins"])
        if test is not None and len(test):
            row.update({k: v for k, v in metrics(test.y, predict(w, test.X, spec), float(train.y.mean())).items()})
        result["ranks"].append(row)
        result.setdefault("spectra", {})[R] = spectrum
    return result

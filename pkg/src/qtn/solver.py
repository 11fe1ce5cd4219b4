"""Alternating least squares for CPD-constrained kernel machines.

Minimizes ``(1/N) sum_n |f(x_n) - y_n|^2 + lam ||w||^2`` over the factors of a
rank-``R`` CPD, one factor at a time. Each subproblem is an exact regularized
linear least-squares problem; the regularizer is the full-tensor norm
expressed through the Hadamard product of the other factors' Grams.
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ._linalg import solve_hermitian
from .errors import ConfigError
from .features import FeatureSpec, feature_blocks
from .tensors import CpdWeights, batch_projections, cpd_norm_sq, gram

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    rank: int = 4
    lam: float = 1e-6
    max_epochs: int = 100
    rel_tol: float = 0.0
    seed: int = 0
    init_scale: float = 1.0

    def __post_init__(self):
        if int(self.rank) < 1:
            raise ConfigError(f"rank must be >= 1, got {self.rank}")
        if not float(self.lam) >= 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if int(self.max_epochs) < 1:
            raise ConfigError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if not float(self.rel_tol) >= 0:
            raise ConfigError(f"rel_tol must be >= 0, got {self.rel_tol}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not float(self.init_scale) >= 0:
            raise ConfigError(f"init_scale must be >= 0, got {self.init_scale}")
        self.rank, self.max_epochs, self.seed = int(self.rank), int(self.max_epochs), int(self.seed)
        self.lam, self.rel_tol, self.init_scale = float(self.lam), float(self.rel_tol), float(self.init_scale)


@dataclass
class TrainReport:
    objective_history: list = field(default_factory=list)
    records: list = field(default_factory=list)
    initial_objective: float = float("nan")
    epoch_count: int = 0
    update_count: int = 0
    final_objective: float = float("nan")
    wall_time: float = 0.0
    fitted: np.ndarray | None = field(default=None, repr=False)
    max_imag: float = 0.0

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r) + "\n" for r in self.records)

    def summary(self) -> dict:
        d = asdict(self)
        for k in ("records", "fitted", "objective_history"):
            d.pop(k)
        return d


def init_factors(mode_dims, R: int, seed: int, init_scale: float = 1.0) -> CpdWeights:
    """Complex standard normal entries scaled by ``init_scale / sqrt(R n_p)``."""
    rng = np.random.default_rng(seed)
    fs = []
    for n in mode_dims:
        z = (rng.standard_normal((n, R)) + 1j * rng.standard_normal((n, R))) / np.sqrt(2)
        fs.append(z * (init_scale / np.sqrt(R * n)))
    return CpdWeights(tuple(fs))


def _features(X, spec: FeatureSpec):
    return feature_blocks(X, spec)


def _other_product(proj: np.ndarray, p: int) -> np.ndarray:
    # in-place loop: np.delete would copy the whole (P, N, R) cache
    out = np.ones(proj.shape[1:], dtype=complex)
    for q in range(proj.shape[0]):
        if q != p:
            out *= proj[q]
    return out


def objective(weights: CpdWeights, X, y, spec: FeatureSpec, lam: float) -> float:
    """Regularized empirical risk with the complex residual and exact ``||w||^2``."""
    feats = _features(X, spec)
    return _objective_from_proj(batch_projections(weights, feats), np.asarray(y), weights, lam)


def _objective_from_proj(proj, y, weights, lam):
    f = proj.prod(axis=0).sum(axis=1)
    return float(np.mean(np.abs(f - y) ** 2)) + lam * cpd_norm_sq(weights)


def normal_equations(p, weights: CpdWeights, projections, feats, y, lam):
    """Design matrix and normal system of the mode-``p`` subproblem.

    Returns ``(A, S, rhs)`` with ``A[n, r n_p + q] = conj(z_p(x_n)[q]) prod_{q' != p} proj[q', n, r]``,
    ``S = A^H A / N + lam (H (x) I)`` and ``rhs = A^H y / N``, where ``H`` is the
    Hadamard product of the other modes' Grams.
    """
    F = feats[p]
    N, n = F.shape
    R = weights.rank
    other = _other_product(projections, p)
    A = (F.conj()[:, None, :] * other[:, :, None]).reshape(N, R * n)
    H = np.ones((R, R), dtype=complex)
    for q, W in enumerate(weights.factors):
        if q != p:
            H *= gram(W)
    S = (A.conj().T @ A) / N + lam * np.kron(H, np.eye(n))
    rhs = (A.conj().T @ y) / N
    return A, S, rhs


def als_update_factor(p, weights: CpdWeights, projections, feats, y, lam) -> np.ndarray:
    """Exact minimizer of the objective over factor ``p`` with all others fixed."""
    _, S, rhs = normal_equations(p, weights, projections, feats, y, lam)
    v = solve_hermitian(S, rhs, min_norm_fallback=(lam == 0))
    n, R = weights.mode_dims[p], weights.rank
    return v.reshape(R, n).T


def stationarity_residual(p, weights: CpdWeights, feats, y, lam) -> float:
    """``||S vec(W_p) - rhs|| / ||rhs||`` for the mode-``p`` subproblem at ``weights``."""
    proj = batch_projections(weights, feats)
    _, S, rhs = normal_equations(p, weights, proj, feats, np.asarray(y), lam)
    v = weights.factors[p].T.reshape(-1)
    return float(np.linalg.norm(S @ v - rhs) / np.linalg.norm(rhs))


def als_train(X, y, spec: FeatureSpec, config: TrainConfig, init: CpdWeights | None = None):
    """Fit a CPD-constrained model by sweeping modes ``0..P-1`` each epoch.

    Returns ``(weights, report)``; the report records the objective after
    every factor update. Deterministic given ``config.seed``.
    """
    t0 = time.perf_counter()
    y = np.asarray(y)
    if not np.iscomplexobj(y):
        y = y.astype(float)
    feats = _features(X, spec)
    if init is None:
        weights = init_factors(spec.mode_dims, config.rank, config.seed, config.init_scale)
    else:
        if init.mode_dims != spec.mode_dims:
            raise ValueError(f"initial weights have modes {init.mode_dims}, features need {spec.mode_dims}")
        weights = init
    proj = batch_projections(weights, feats)
    report = TrainReport()
    obj = _objective_from_proj(proj, y, weights, config.lam)
    report.initial_objective = obj
    start = time.time()
    for epoch in range(1, config.max_epochs + 1):
        epoch_start = obj
        for p in range(weights.num_modes):
            W = als_update_factor(p, weights, proj, feats, y, config.lam)
            weights = weights.with_factor(p, W)
            proj[p] = feats[p].conj() @ weights.factors[p]
            obj = _objective_from_proj(proj, y, weights, config.lam)
            report.objective_history.append(obj)
            report.records.append(
                {"epoch": epoch, "mode": p, "objective": obj, "timestamp": round(time.time() - start, 6)}
            )
        report.epoch_count = epoch
        if config.rel_tol > 0 and (epoch_start - obj) <= config.rel_tol * max(abs(epoch_start), 1e-300):
            break
    fitted = proj.prod(axis=0).sum(axis=1)
    report.update_count = len(report.objective_history)
    report.final_objective = obj
    report.fitted = fitted
    report.max_imag = float(np.abs(fitted.imag).max()) if fitted.size else 0.0
    report.wall_time = time.perf_counter() - t0
    return weights, report


def predict(weights: CpdWeights, X, spec: FeatureSpec, return_imag: bool = False):
    """Real part of the model response for every row of ``X``."""
    feats = _features(X, spec)
    f = batch_projections(weights, feats).prod(axis=0).sum(axis=1)
    max_imag = float(np.abs(f.imag).max()) if f.size else 0.0
    log.debug("max |Im f| over %d predictions: %.3g", f.size, max_imag)
    if return_imag:
        return f.real.copy(), max_imag
    return f.real.copy()

"""Exact dual kernel ridge regression and random Fourier feature baselines."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._linalg import solve_hermitian
from .errors import ConfigError, DataError
from .features import FOURIER, FeatureSpec, fourier_factor_dense, vandermonde

KRR_MAX_N = 20000


def _per_dim_features(x, spec: FeatureSpec, d: int) -> np.ndarray:
    if spec.kind == FOURIER:
        return fourier_factor_dense(x, spec.M[d], spec.L, spec.frequency_shift)
    return vandermonde(np.asarray(x, dtype=float), spec.M[d])


def product_kernel(x, x2, spec: FeatureSpec) -> complex:
    """``<z(x), z(x2)>`` as ``prod_d <v_d(x_d), v_d(x2_d)>`` (first argument conjugated)."""
    x, x2 = np.asarray(x, dtype=float), np.asarray(x2, dtype=float)
    if x.shape != (spec.D,) or x2.shape != (spec.D,):
        raise ValueError(f"inputs must have {spec.D} dimensions")
    k = 1 + 0j
    for d in range(spec.D):
        k *= np.vdot(_per_dim_features(x[d], spec, d), _per_dim_features(x2[d], spec, d))
    return complex(k)


def kernel_matrix(X1, X2, spec: FeatureSpec) -> np.ndarray:
    """``K[i, j] = k(X1[i], X2[j])`` without materializing full feature vectors."""
    X1, X2 = np.atleast_2d(X1), np.atleast_2d(X2)
    if X1.shape[1] != spec.D or X2.shape[1] != spec.D:
        raise ValueError(f"inputs must have {spec.D} columns")
    K = np.ones((X1.shape[0], X2.shape[0]), dtype=complex)
    for d in range(spec.D):
        A = _per_dim_features(X1[:, d], spec, d)
        B = _per_dim_features(X2[:, d], spec, d)
        K *= A.conj() @ B.T
    return K


@dataclass(frozen=True)
class DualModel:
    alpha: np.ndarray
    X: np.ndarray
    spec: FeatureSpec
    lam: float


def krr_fit(X, y, lam: float, spec: FeatureSpec, max_n: int = KRR_MAX_N) -> DualModel:
    """Solve ``(K + N lam I) alpha = y``; the ``N`` matches the ``1/N`` loss scaling."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y)
    N = X.shape[0]
    if N > max_n:
        raise DataError(f"KRR needs an {N}x{N} kernel matrix; limit is N <= {max_n}")
    if lam < 0:
        raise ConfigError(f"lambda must be >= 0, got {lam}")
    K = kernel_matrix(X, X, spec)
    alpha = solve_hermitian(K + N * lam * np.eye(N), y.astype(complex))
    return DualModel(alpha, X, spec, float(lam))


def krr_predict(model: DualModel, X) -> np.ndarray:
    """``Re sum_n k(x*, x_n) alpha_n``."""
    K = kernel_matrix(np.atleast_2d(X), model.X, model.spec)
    return (K @ model.alpha).real


# -- random Fourier features ---------------------------------------------------

def rff_features(X, num_features: int, lengthscale: float, seed: int) -> np.ndarray:
    """``sqrt(2/P) cos(X omega + b)`` approximating a Gaussian kernel of the given lengthscale."""
    if num_features < 1:
        raise ConfigError(f"number of random features must be >= 1, got {num_features}")
    if not lengthscale > 0:
        raise ConfigError(f"lengthscale must be > 0, got {lengthscale}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    rng = np.random.default_rng(seed)
    omega = rng.standard_normal((X.shape[1], num_features)) / lengthscale
    phase = rng.uniform(0, 2 * np.pi, num_features)
    return np.sqrt(2.0 / num_features) * np.cos(X @ omega + phase)


def gaussian_kernel(X1, X2, lengthscale: float) -> np.ndarray:
    X1, X2 = np.atleast_2d(X1), np.atleast_2d(X2)
    d2 = ((X1[:, None, :] - X2[None, :, :]) ** 2).sum(-1)
    return np.exp(-0.5 * d2 / lengthscale**2)


def ridge_fit(Z, y, lam: float) -> np.ndarray:
    """Primal ridge ``min (1/N)||Z w - y||^2 + lam ||w||^2``."""
    Z = np.asarray(Z)
    N = Z.shape[0]
    S = Z.conj().T @ Z / N + lam * np.eye(Z.shape[1])
    return solve_hermitian(S, Z.conj().T @ np.asarray(y) / N, min_norm_fallback=(lam == 0))


@dataclass(frozen=True)
class RffModel:
    coef: np.ndarray
    num_features: int
    lengthscale: float
    seed: int

    def predict(self, X) -> np.ndarray:
        return rff_features(X, self.num_features, self.lengthscale, self.seed) @ self.coef


def rff_fit(X, y, num_features: int, lengthscale: float, lam: float, seed: int) -> RffModel:
    Z = rff_features(X, num_features, lengthscale, seed)
    return RffModel(ridge_fit(Z, y, lam), num_features, lengthscale, seed)


# -- cross validation ------------------------------------------------------------

def fold_indices(N: int, folds: int, seed: int) -> list[np.ndarray]:
    """Random partition of ``range(N)`` into ``folds`` near-equal parts."""
    if folds < 2 or folds > N:
        raise ConfigError(f"need 2 <= folds <= N, got folds={folds}, N={N}")
    perm = np.random.default_rng(seed).permutation(N)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def cross_validate(X, y, lambda_grid, L_grid, spec: FeatureSpec, folds: int = 3, seed: int = 0):
    """Grid search of ``(lam, L)`` minimizing mean validation MSE of KRR.

    Ties go to the larger ``lam``, then the larger ``L``. Returns
    ``(best_lam, best_L, table)`` with one ``(lam, L, mse)`` row per grid point.
    """
    lambda_grid, L_grid = list(lambda_grid), list(L_grid)
    if not lambda_grid or not L_grid:
        raise ConfigError("cross-validation grids must be non-empty")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    parts = fold_indices(X.shape[0], folds, seed)
    table = []
    for lam, L in itertools.product(lambda_grid, L_grid):
        s = spec.replace(L=L)
        errs = []
        for i, val in enumerate(parts):
            tr = np.concatenate([p for j, p in enumerate(parts) if j != i])
            model = krr_fit(X[tr], y[tr], lam, s)
            errs.append(np.mean((krr_predict(model, X[val]) - y[val]) ** 2))
        table.append((float(lam), float(L), float(np.mean(errs))))
    best = min(table, key=lambda t: (t[2] if math.isfinite(t[2]) else math.inf, -t[0], -t[1]))
    return best[0], best[1], table


def cross_validate_rff(X, y, lengthscale_grid, lam: float, num_features: int, folds: int = 3, seed: int = 0):
    """Lengthscale selection for RFF ridge at fixed ``lam``; ties go to the larger lengthscale."""
    return cross_validate_rff_joint(X, y, lengthscale_grid, [lam], num_features, folds, seed)[0]


def cross_validate_rff_joint(X, y, lengthscale_grid, lambda_grid, num_features: int, folds: int = 3, seed: int = 0):
    """Joint ``(lengthscale, lam)`` grid search for RFF ridge.

    Ties go to the larger ``lam``, then the larger lengthscale.
    """
    grid, lams = list(lengthscale_grid), list(lambda_grid)
    if not grid or not lams:
        raise ConfigError("cross-validation grid must be non-empty")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    parts = fold_indices(X.shape[0], folds, seed)
    scores = []
    for ls, lam in itertools.product(grid, lams):
        errs = []
        for i, val in enumerate(parts):
            tr = np.concatenate([p for j, p in enumerate(parts) if j != i])
            m = rff_fit(X[tr], y[tr], num_features, ls, lam, seed)
            errs.append(np.mean((m.predict(X[val]) - y[val]) ** 2))
        err = float(np.mean(errs))
        scores.append((err if math.isfinite(err) else math.inf, -float(lam), -float(ls)))
    _, neg_lam, neg_ls = min(scores)
    return -neg_ls, -neg_lam

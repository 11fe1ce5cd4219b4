"""Shared fixtures-as-functions for the test suite."""
import numpy as np

from qtn.features import FeatureSpec, feature_blocks
from qtn.tensors import CpdWeights, batch_responses

MONOTONE_SLACK = 1e-9


def assert_monotone(report, slack=MONOTONE_SLACK):
    h = np.array([report.initial_objective] + list(report.objective_history))
    worst = np.max(np.diff(h) - slack * np.abs(h[:-1])) if h.size > 1 else -1.0
    assert worst <= 0, f"objective increased by {worst:.3g} beyond {slack} relative slack"


def smooth_regression(N, D, seed=0, noise=0.05):
    """Inputs in the unit box, a smooth nonlinear target plus noise."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (N, D))
    y = np.sin(2 * np.pi * X[:, 0]) + 0.5 * np.cos(3 * X).sum(axis=1) / D + 0.3 * X.prod(axis=1)
    return X, y + noise * rng.standard_normal(N)


def planted_instance(seed=0, N=256):
    """Complex targets from a rank-2 quantized Fourier CPD, M = (8, 8), L = 1."""
    rng = np.random.default_rng(seed)
    spec = FeatureSpec("fourier", (8, 8), 2, L=1.0)
    X = rng.uniform(0, 1, (N, 2))
    true = CpdWeights(
        tuple((rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / 2 for _ in range(spec.num_modes))
    )
    return X, batch_responses(true, feature_blocks(X, spec)), spec

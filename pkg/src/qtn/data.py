"""Dataset ingestion, unit-box scaling, splits, metrics and synthetic signals."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError
from .features import FOURIER, FeatureSpec, response_frequencies
from .tensors import KRON_CAP, CpdWeights, cpd_reconstruct


@dataclass(frozen=True)
class Scaler:
    """Per-column min-max map to ``[0, 1]``; constant columns map to 0."""

    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, X) -> "Scaler":
        X = np.asarray(X, dtype=float)
        return cls(X.min(axis=0), X.max(axis=0))

    def transform(self, X) -> np.ndarray:
        span = self.hi - self.lo
        span = np.where(span > 0, span, 1.0)
        return (np.asarray(X, dtype=float) - self.lo) / span

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}

    @classmethod
    def from_dict(cls, d) -> "Scaler":
        return cls(np.asarray(d["lo"], dtype=float), np.asarray(d["hi"], dtype=float))


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    scaler: Scaler | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError("dataset contains NaN or Inf")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.y.shape[0]


def load_csv(path, target_column=None):
    """Numeric CSV with a header row; returns ``(X, y, feature_names)``.

    ``target_column`` is a column name or index; default is the last column.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None
    rows = [r for r in rows if any(c.strip() for c in r)]
    if len(rows) < 2:
        raise DataError(f"{path}: empty file or header only")
    header = [h.strip() for h in rows[0]]
    values = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: line {i} has {len(row)} fields, header has {len(header)}")
        for j, cell in enumerate(row):
            try:
                values[i - 2, j] = float(cell)
            except ValueError:
                raise DataError(f"{path}: non-numeric value {cell!r} at line {i}, column {header[j]!r}") from None
    if target_column is None:
        t = len(header) - 1
    elif isinstance(target_column, int):
        t = target_column
    elif target_column in header:
        t = header.index(target_column)
    else:
        raise DataError(f"{path}: target column {target_column!r} not in header {header}")
    keep = [j for j in range(len(header)) if j != t]
    return values[:, keep], values[:, t], [header[j] for j in keep]


def load_table(path, target_column=None):
    """``load_csv`` for ``.csv`` files; otherwise a headerless whitespace-separated
    numeric table (the UCI ``.data`` layout) with columns named ``x0, x1, ...``.
    """
    if str(path).lower().endswith(".csv"):
        return load_csv(path, target_column)
    try:
        values = np.loadtxt(path, ndmin=2)
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None
    except ValueError as e:
        raise DataError(f"{path}: {e}") from None
    if values.shape[0] < 1 or values.shape[1] < 2:
        raise DataError(f"{path}: need at least one row and two columns, got shape {values.shape}")
    t = values.shape[1] - 1 if target_column is None else int(target_column)
    keep = [j for j in range(values.shape[1]) if j != t]
    return values[:, keep], values[:, t], [f"x{j}" for j in keep]


def split(dataset: Dataset, train_fraction: float = 0.8, seed: int = 0):
    """Random train/test split; the unit-box scaler is fitted on the training rows."""
    if not 0 < train_fraction < 1:
        raise DataError(f"train_fraction must be in (0, 1), got {train_fraction}")
    N = len(dataset)
    n_train = int(round(train_fraction * N))
    if not 0 < n_train < N:
        raise DataError(f"split of N={N} at fraction {train_fraction} leaves an empty part")
    perm = np.random.default_rng(seed).permutation(N)
    tr, te = perm[:n_train], perm[n_train:]
    scaler = Scaler.fit(dataset.X[tr])
    prov = dict(dataset.provenance, split_seed=seed, train_fraction=train_fraction)
    train = Dataset(scaler.transform(dataset.X[tr]), dataset.y[tr], scaler, dict(prov, part="train", index=tr.tolist()))
    test = Dataset(scaler.transform(dataset.X[te]), dataset.y[te], scaler, dict(prov, part="test", index=te.tolist()))
    return train, test


def standardize_targets(train: Dataset, *others: Dataset):
    """Zero-mean unit-variance targets using training statistics; returns ``(mean, sd, datasets)``."""
    mu = float(train.y.mean())
    sd = float(train.y.std())
    sd = sd if sd > 0 else 1.0
    out = [replace(d, y=(d.y - mu) / sd) for d in (train,) + others]
    return mu, sd, out


def metrics(y_true, y_pred, y_train_mean: float) -> dict:
    """MSE, MAE and SMAE (MAE over the MAE of predicting ``y_train_mean``)."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape:
        raise DataError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    mae = float(np.mean(np.abs(y_true - y_pred)))
    base = float(np.mean(np.abs(y_true - y_train_mean)))
    defined = base > 0
    return {
        "MSE": float(np.mean((y_true - y_pred) ** 2)),
        "MAE": mae,
        "SMAE": mae / base if defined else float("nan"),
        "SMAE_defined": defined,
    }


def synth_signal(num_samples: int, peaks, noise_sd: float = 0.0, seed: int = 0) -> Dataset:
    """``y = sum_k a_k cos(2 pi f_k x + phi_k) + noise`` with ``x ~ U[0, 1]``.

    ``peaks`` is a list of ``(frequency, amplitude, phase)``; frequencies are
    non-negative integers. The ground truth is kept in ``provenance["peaks"]``.
    """
    peaks = [(int(f), float(a), float(ph)) for f, a, ph in peaks]
    freqs = [p[0] for p in peaks]
    if len(set(freqs)) != len(freqs):
        raise DataError(f"duplicate peak frequencies in {freqs}")
    if any(f < 0 for f in freqs):
        raise DataError("peak frequencies must be non-negative")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, num_samples)
    y = np.zeros(num_samples)
    for f, a, ph in peaks:
        y += a * np.cos(2 * np.pi * f * x + ph)
    if noise_sd > 0:
        y += noise_sd * rng.standard_normal(num_samples)
    return Dataset(x[:, None], y, None, {"source": "synthetic", "seed": seed, "peaks": peaks, "noise_sd": noise_sd})


def airline_like(num_samples: int, seed: int = 0):
    """Synthetic stand-in for the airline-delay table: eight covariates
    (month, day, weekday, plane age, distance, airtime, departure and arrival
    hour) and a delay with seasonal/daily structure plus heavy-tailed noise.
    Returns ``(X, y)``.
    """
    rng = np.random.default_rng(seed)
    N = num_samples
    month = rng.integers(1, 13, N)
    day = rng.integers(1, 29, N)
    weekday = rng.integers(1, 8, N)
    age = rng.uniform(0, 30, N)
    dist = rng.lognormal(6.5, 0.6, N)
    airtime = dist / 7.5 + rng.normal(0, 10, N)
    dep = rng.uniform(0, 24, N)
    arr = (dep + airtime / 60 + 0.5) % 24
    X = np.column_stack([month, day, weekday, age, dist, airtime, dep, arr]).astype(float)
    y = 5 * np.sin(2 * np.pi * month / 12) + 3 * (weekday >= 5) + 0.4 * dep + 0.01 * airtime + 0.1 * age
    return X, y + rng.standard_t(3, N) * 5


def spectrum_extract(weights: CpdWeights, spec: FeatureSpec, cap: int = KRON_CAP):
    """``(frequency, |coefficient|)`` for every weight of a 1-D Fourier model."""
    if spec.kind != FOURIER or spec.D != 1:
        raise ValueError("spectrum extraction needs a one-dimensional Fourier model")
    if spec.M[0] > cap:
        raise ValueError(f"M={spec.M[0]} exceeds cap {cap}")
    w = cpd_reconstruct(weights, cap=cap)
    freqs = response_frequencies(spec.M[0], spec.L, spec.frequency_shift)
    return list(zip(freqs.tolist(), np.abs(w).tolist()))


def dense_spectrum(w, spec: FeatureSpec):
    freqs = response_frequencies(spec.M[0], spec.L, spec.frequency_shift)
    return list(zip(freqs.tolist(), np.abs(np.asarray(w)).tolist()))


def top_bins(spectrum, k: int):
    """The ``k`` largest-magnitude ``(frequency, magnitude)`` pairs, largest first."""
    return sorted(spectrum, key=lambda t: -t[1])[:k]


def write_spectrum_csv(path, spectrum) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frequency", "magnitude"])
        for f, m in spectrum:
            w.writerow([repr(float(f)), repr(float(m))])


def relative_error(w_ref, w) -> float:
    w_ref, w = np.asarray(w_ref), np.asarray(w)
    return float(np.linalg.norm(w_ref - w) / np.linalg.norm(w_ref))


import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtn.data import (
    Dataset,
    Scaler,
    dense_spectrum,
    load_csv,
    load_table,
    metrics,
    relative_error,
    spectrum_extract,
    split,
    standardize_targets,
    synth_signal,
    top_bins,
    write_spectrum_csv,
)
from qtn.errors import DataError
from qtn.features import FeatureSpec
from qtn.solver import TrainConfig, als_train, init_factors
from qtn.tensors import CpdWeights

# -- CSV --------------------------------------------------------------------------


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_csv_exact(tmp_path):
    p = write(tmp_path, "a,b,y\n1,2,3\n4.5,-1,0\n1,2,3\n")
    X, y, names = load_csv(p)
    np.testing.assert_array_equal(X, [[1, 2], [4.5, -1], [1, 2]])
    np.testing.assert_array_equal(y, [3, 0, 3])
    assert names == ["a", "b"]


def test_load_csv_named_and_indexed_target(tmp_path):
    p = write(tmp_path, "y,a\n1,2\n3,4\n")
    X, y, names = load_csv(p, "y")
    np.testing.assert_array_equal(y, [1, 3])
    assert names == ["a"]
    X2, y2, _ = load_csv(p, 0)
    np.testing.assert_array_equal(y2, y)


def test_load_csv_errors(tmp_path):
    with pytest.raises(DataError, match="not in header"):
        load_csv(write(tmp_path, "a,b\n1,2\n"), "z")
    with pytest.raises(DataError, match="line 3, column 'b'"):
        load_csv(write(tmp_path, "a,b\n1,2\n3,x\n"))
    with pytest.raises(DataError, match="empty"):
        load_csv(write(tmp_path, "a,b\n"))
    with pytest.raises(DataError, match="fields"):
        load_csv(write(tmp_path, "a,b\n1,2,3\n"))
    with pytest.raises(DataError, match="cannot read"):
        load_csv(tmp_path / "missing.csv")


def test_dataset_rejects_non_finite():
    with pytest.raises(DataError):
        Dataset(np.array([[np.inf]]), np.array([1.0]))
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 1)), np.zeros(3))


# -- scaling and splitting ------------------------------------------------------------

def test_split_sizes_and_scaling():
    rng = np.random.default_rng(0)
    ds = Dataset(rng.normal(5, 3, (10, 3)), rng.standard_normal(10))
    train, test = split(ds, 0.8, seed=1)
    assert (len(train), len(test)) == (8, 2)
    assert train.X.min() >= 0 and train.X.max() <= 1
    np.testing.assert_allclose(train.X.min(axis=0), 0, atol=1e-15)
    np.testing.assert_allclose(train.X.max(axis=0), 1, atol=1e-15)
    assert train.scaler is test.scaler


def test_split_rejects_bad_fraction():
    ds = Dataset(np.zeros((10, 1)), np.zeros(10))
    for f in (0.0, 1.0, -0.5):
        with pytest.raises(DataError):
            split(ds, f)


@settings(max_examples=40, deadline=None)
@given(N=st.integers(2, 200), seed=st.integers(0, 2**32 - 1), frac=st.floats(0.05, 0.95))
def test_split_partition_and_determinism(N, seed, frac):
    ds = Dataset(np.arange(N, dtype=float)[:, None], np.arange(N, dtype=float))
    n_train = int(round(frac * N))
    if not 0 < n_train < N:
        with pytest.raises(DataError):
            split(ds, frac, seed)
        return
    a_tr, a_te = split(ds, frac, seed)
    b_tr, b_te = split(ds, frac, seed)
    ia, ib = a_tr.provenance["index"], a_te.provenance["index"]
    assert ia == b_tr.provenance["index"] and ib == b_te.provenance["index"]
    assert sorted(ia + ib) == list(range(N))
    np.testing.assert_array_equal(a_tr.y, ds.y[ia])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), N=st.integers(2, 50), D=st.integers(1, 4))
def test_scaling_idempotent(seed, N, D):
    X = np.random.default_rng(seed).normal(0, 10, (N, D))
    Xs = Scaler.fit(X).transform(X)
    np.testing.assert_allclose(Scaler.fit(Xs).transform(Xs), Xs, atol=1e-15)


def test_constant_column_maps_to_zero_and_roundtrip():
    X = np.array([[1.0, 3.0], [2.0, 3.0]])
    s = Scaler.fit(X)
    np.testing.assert_array_equal(s.transform(X)[:, 1], 0)
    s2 = Scaler.from_dict(s.to_dict())
    np.testing.assert_array_equal(s2.transform(X), s.transform(X))


def test_standardize_targets_uses_train_statistics():
    tr = Dataset(np.zeros((4, 1)), np.array([1.0, 2.0, 3.0, 4.0]))
    te = Dataset(np.zeros((1, 1)), np.array([2.5]))
    mu, sd, (a, b) = standardize_targets(tr, te)
    assert mu == 2.5 and sd == pytest.approx(np.sqrt(1.25))
    assert a.y.mean() == pytest.approx(0) and a.y.std() == pytest.approx(1)
    assert b.y[0] == 0


# -- metrics ----------------------------------------------------------------------

def test_metrics_perfect():
    m = metrics([1.0, 2.0, 4.0], [1.0, 2.0, 4.0], 0.0)
    assert m["MSE"] == 0 and m["SMAE"] == 0 and m["SMAE_defined"]


def test_metrics_mean_predictor_smae_one():
    y = np.array([1.0, 5.0, 2.0])
    assert metrics(y, np.full(3, 2.0), 2.0)["SMAE"] == 1


def test_metrics_hand_example():
    m = metrics([0.0, 2.0], [1.0, 1.0], 1.0)
    assert m["MSE"] == 1 and m["MAE"] == 1 and m["SMAE"] == 1


def test_metrics_undefined_and_mismatch():
    m = metrics([1.0, 1.0], [0.0, 2.0], 1.0)
    assert not m["SMAE_defined"] and np.isnan(m["SMAE"])
    with pytest.raises(DataError):
        metrics([1.0], [1.0, 2.0], 0.0)


# -- synthetic signal ---------------------------------------------------------------

def test_synth_single_cosine_exact():
    ds = synth_signal(50, [(3, 1.0, 0.0)], 0.0, seed=2)
    np.testing.assert_allclose(ds.y, np.cos(2 * np.pi * 3 * ds.X[:, 0]), atol=1e-15)
    assert ds.provenance["peaks"] == [(3, 1.0, 0.0)]


def test_synth_zero_peaks_is_noise():
    ds = synth_signal(4000, [], 0.5, seed=3)
    assert ds.y.std() == pytest.approx(0.5, rel=0.05)


def test_synth_rejects_duplicate_frequencies():
    with pytest.raises(DataError):
        synth_signal(10, [(3, 1, 0), (3, 0.5, 1)])


def test_synth_parseval():
    peaks = [(5, 1.0, 0.3), (11, 0.5, 1.0), (40, 0.25, -2.0)]
    ds = synth_signal(200_000, peaks, 0.0, seed=4)
    assert np.mean(ds.y**2) == pytest.approx(sum(a * a / 2 for _, a, _ in peaks), rel=0.02)


# -- spectra ----------------------------------------------------------------------

def test_spectrum_one_hot_single_bin():
    spec = FeatureSpec("fourier", (8,), 2, 1.0)
    onehot = [np.array([[0.0], [1.0]]), np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])]
    sp = spectrum_extract(CpdWeights(tuple(onehot)), spec)
    mags = np.array([m for _, m in sp])
    assert np.count_nonzero(mags) == 1 and mags[1 + 4] == 1
    assert sp[5][0] == 5 - 5  # frequency of index m is m - (2 + M)/2


def test_spectrum_zero_weights():
    spec = FeatureSpec("fourier", (16,), 2)
    sp = spectrum_extract(init_factors(spec.mode_dims, 2, 0, 0.0), spec)
    assert all(m == 0 for _, m in sp) and len(sp) == 16


def test_spectrum_planted_sinusoid():
    ds = synth_signal(200, [(3, 1.0, 0.7)], 0.0, seed=5)
    spec = FeatureSpec("fourier", (16,), 2, 1.0)
    w, _ = als_train(ds.X, ds.y, spec, TrainConfig(rank=2, lam=0.0, max_epochs=30, seed=0))
    (f, _), = top_bins(spectrum_extract(w, spec), 1)
    assert abs(f) == 3


def test_spectrum_requires_1d_fourier_and_cap():
    w = init_factors((2, 2), 1, 0)
    with pytest.raises(ValueError):
        spectrum_extract(w, FeatureSpec("polynomial", (4,), 2))
    with pytest.raises(ValueError, match="cap"):
        spectrum_extract(init_factors((2,) * 5, 1, 0), FeatureSpec("fourier", (32,), 2), cap=16)


def test_spectrum_csv_and_helpers(tmp_path):
    spec = FeatureSpec("fourier", (4,), None, 2.0, frequency_shift=-1)
    sp = dense_spectrum([1, -2j, 0, 0.5], spec)
    assert [f for f, _ in sp] == [-1.0, -0.5, 0.0, 0.5]
    assert top_bins(sp, 2) == [(-0.5, 2.0), (-1.0, 1.0)]
    write_spectrum_csv(tmp_path / "s.csv", sp)
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "frequency,magnitude" and len(lines) == 5
    assert relative_error([3, 4], [3, 4]) == 0
    assert relative_error([3, 4], [0, 0]) == 1


def test_load_table_whitespace_layout(tmp_path):
    p = write(tmp_path, "-2.3 0.568 4.78 0.11\n-2.3  0.568 4.78 0.27\n", "yacht.data")
    X, y, names = load_table(p)
    np.testing.assert_array_equal(X, [[-2.3, 0.568, 4.78]] * 2)
    np.testing.assert_array_equal(y, [0.11, 0.27])
    assert names == ["x0", "x1", "x2"]
    with pytest.raises(DataError):
        load_table(write(tmp_path, "1 2\n3 x\n", "bad.data"))
    with pytest.raises(DataError):
        load_table(write(tmp_path, "1\n2\n", "one.data"))
    csvp = write(tmp_path, "a,y\n1,2\n")
    assert load_table(csvp)[2] == ["a"]

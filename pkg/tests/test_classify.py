import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from sensorprint.accel import ZAxisFingerprint
from sensorprint.audio import AudioFingerprint, PROBE_FREQUENCIES
from sensorprint.classify import (DistanceVariant, FingerprintDb, ScaledDistanceConfig,
                                  extract_features, kfold_accuracy, knn, knn_classify, l2_classify,
                                  mle_classify, mle_fit, scaled_accel_distance, stratified_folds)

finite = st.floats(-10, 10, allow_nan=False)


def _fp(h1, h2):
    vals = {}
    for f, a, b in zip(PROBE_FREQUENCIES, h1, h2):
        vals[(f, 1)], vals[(f, 2)] = a, b
    return AudioFingerprint(vals)


# --- features --------------------------------------------------------------

def test_feature_lengths_and_content():
    h2 = np.linspace(0.1, 0.7, 7)
    fp = _fp(np.ones(7), h2)
    assert np.array_equal(extract_features(fp, "A"), np.ones(7))
    assert np.array_equal(extract_features(fp, DistanceVariant.B), h2)
    bp = extract_features(fp, "B'")
    assert len(bp) == 13 and np.allclose(bp[7:], np.diff(h2))
    bpp = extract_features(fp, "B''")
    assert len(bpp) == 7 + 6 + 5 and np.allclose(bpp[13:], np.diff(h2, 2))


def test_constant_fp_has_zero_differences():
    bp = extract_features(_fp(np.ones(7), np.full(7, 0.3)), "B'")
    assert np.all(bp[7:] == 0)


def test_missing_harmonic():
    fp = AudioFingerprint({(f, 1): 1.0 for f in PROBE_FREQUENCIES})
    with pytest.raises(KeyError):
        extract_features(fp, "B")
    with pytest.raises(ValueError):
        extract_features(fp, "C")


# --- L2 --------------------------------------------------------------------

def test_l2_examples():
    db = FingerprintDb.single({"d1": (0, 0), "d2": (1, 1)})
    assert l2_classify(db, (0.1, 0.1)) == "d1"
    assert l2_classify(db, (1, 1)) == "d2"
    tie = FingerprintDb.single({"b": (1, 1), "a": (1, 1)})
    assert l2_classify(tie, (0, 0)) == "a"
    with pytest.raises(ValueError):
        l2_classify(db, (0, 0, 0))
    with pytest.raises(ValueError):
        FingerprintDb.single({})
    with pytest.raises(ValueError):
        FingerprintDb({"a": [np.zeros(2), np.zeros(3)]})


def test_l2_multiple_enrolled_vectors():
    db = FingerprintDb({"a": [np.array([0.0]), np.array([10.0])], "b": [np.array([4.0])]})
    assert l2_classify(db, [9.0]) == "a"


@given(st.integers(2, 6), st.integers(1, 5), finite, st.integers(0, 2**31))
def test_l2_invariant_to_constant_feature(n, dim, c, seed):
    rng = np.random.default_rng(seed)
    vecs = {f"d{i}": rng.normal(size=dim) for i in range(n)}
    probe = rng.normal(size=dim)
    plain = l2_classify(FingerprintDb.single(vecs), probe)
    padded = l2_classify(FingerprintDb.single({k: np.append(v, c) for k, v in vecs.items()}),
                         np.append(probe, c))
    assert plain == padded


# --- MLE -------------------------------------------------------------------

def test_mle_fit_statistics_and_floor():
    m = mle_fit({"a": [[2.0, 5.0], [4.0, 5.0]], "b": [[0.0, 0.0], [1.0, 1.0]]})
    assert m.devices == ["a", "b"]
    assert np.allclose(m.mean[0], [3.0, 5.0])
    assert m.var[0, 0] == 1.0 and m.var[0, 1] == 1e-12
    assert np.allclose(m.mean[1], [0.5, 0.5]) and np.allclose(m.var[1], [0.25, 0.25])
    with pytest.raises(ValueError):
        mle_fit({"a": [[1.0]]})


def test_mle_variance_weighting_overturns_nearest_mean():
    m = mle_fit({"d1": [[-1.0], [1.0]], "d2": [[-9.0], [11.0]]})
    assert m.mean[:, 0].tolist() == [0.0, 1.0] and m.var[:, 0].tolist() == [1.0, 100.0]
    assert np.allclose(m.scores([0.6]), [-0.36, -0.0016])
    assert mle_classify(m, [0.6]) == "d2"
    with pytest.raises(ValueError):
        mle_classify(m, [0.6, 0.1])


def test_mle_probe_at_mean():
    m = mle_fit({"a": [[0, 0], [2, 2]], "b": [[5, 5], [7, 7]]})
    assert mle_classify(m, [6, 6]) == "b"


@given(st.integers(2, 6), st.integers(1, 4), st.integers(0, 2**31))
def test_mle_equals_l2_on_means_with_equal_variances(n, dim, seed):
    rng = np.random.default_rng(seed)
    training = {}
    for i in range(n):
        mu = rng.normal(size=dim)
        training[f"d{i}"] = [mu - 1.0, mu + 1.0]  # variance exactly 1 per feature
    model = mle_fit(training)
    db = FingerprintDb.single({k: np.mean(v, axis=0) for k, v in training.items()})
    for _ in range(5):
        probe = rng.normal(size=dim) * 2
        assert mle_classify(model, probe) == l2_classify(db, probe)


# --- scaled accelerometer distance ----------------------------------------

def test_scaled_distance_examples():
    a = ZAxisFingerprint(0.0, 1.0)
    b = ZAxisFingerprint(0.1, 1.01)
    assert scaled_accel_distance(a, a) == 0.0
    assert scaled_accel_distance(a, b, ScaledDistanceConfig(300)) == pytest.approx(0.04)
    assert scaled_accel_distance(a, b, ScaledDistanceConfig(0)) == pytest.approx(0.01)
    with pytest.raises(ValueError):
        ScaledDistanceConfig(-1)


@given(st.floats(-0.5, 0.5), st.floats(0.99, 1.04), st.floats(-0.5, 0.5), st.floats(0.99, 1.04),
       st.floats(1e-3, 1e4))
def test_scaled_distance_symmetric_and_definite(o1, s1, o2, s2, m):
    a, b = ZAxisFingerprint(o1, s1), ZAxisFingerprint(o2, s2)
    cfg = ScaledDistanceConfig(m)
    assert scaled_accel_distance(a, b, cfg) == scaled_accel_distance(b, a, cfg)
    assert (scaled_accel_distance(a, b, cfg) == 0) == (o1 == o2 and s1 == s2)


# --- kNN -------------------------------------------------------------------

def test_knn_examples():
    data = [((0.0,), "X"), ((2.0,), "X"), ((1.5,), "Y")]
    assert knn_classify(data, (1.0,), 3) == "X"
    assert knn_classify(data, (1.5,), 1) == "Y"
    distinct = [((float(i),), lbl) for i, lbl in enumerate("dcab")]
    assert knn_classify(distinct, (0.0,), 4) == "a"
    with pytest.raises(ValueError):
        knn_classify([], (0.0,), 1)
    with pytest.raises(ValueError):
        knn_classify(data, (0.0,), 4)


def test_knn_distance_ties_use_insertion_order():
    data = [((1.0,), "b"), ((-1.0,), "a")]
    assert knn_classify(data, (0.0,), 1) == "b"


@given(arrays(float, (8, 3), elements=finite, unique=True), st.integers(0, 7))
def test_knn_k1_exact_match(x, i):
    labeled = [(row, f"l{j}") for j, row in enumerate(x)]
    if sum(np.array_equal(x[i], r) for r in x) == 1:
        assert knn_classify(labeled, x[i], 1) == f"l{i}"


# --- cross-validation ------------------------------------------------------

def test_stratified_folds_balance():
    labels = [c for c in "abc" for _ in range(10)]
    folds = stratified_folds(labels, 10, seed=3)
    for f in range(10):
        members = [lbl for lbl, a in zip(labels, folds) if a == f]
        assert sorted(members) == ["a", "b", "c"]


def test_kfold_separable_and_deterministic():
    rng = np.random.default_rng(0)
    labeled = [(rng.normal(10 * c, 0.1, 2), c) for c in range(4) for _ in range(10)]
    res = kfold_accuracy(labeled, 10, knn(1), seed=5)
    assert res.accuracy == 1.0 and res.total == 40 and not res.small_class_warning
    assert kfold_accuracy(labeled, 10, knn(1), seed=5) == res
    assert kfold_accuracy(labeled, 5, knn(3), seed=1).accuracy == 1.0


def test_kfold_chance_level():
    accs = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        labeled = [((0.0, 0.0), int(rng.integers(2))) for _ in range(60)]
        accs.append(kfold_accuracy(labeled, 10, knn(1), seed=seed).accuracy)
    assert 0.35 <= np.mean(accs) <= 0.65


def test_kfold_small_class_warning_and_errors():
    labeled = [((float(i),), i % 3) for i in range(12)]
    with pytest.warns(RuntimeWarning):
        res = kfold_accuracy(labeled, 10, knn(1), seed=0)
    assert res.small_class_warning
    with pytest.raises(ValueError):
        kfold_accuracy(labeled, 1)
    with pytest.raises(ValueError):
        kfold_accuracy(labeled[:3], 4)

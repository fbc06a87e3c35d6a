import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from commrec.clustering import (
    ClusterAssignment,
    FeatureVector,
    cluster_balanced,
    extract_features,
    kmeans_cost,
)
from commrec.fixtures import feeder_dataset
from commrec.measurements import MeasurementBlock


def block(*columns):
    cols = [np.asarray(c, dtype=float) for c in columns]
    return MeasurementBlock([f"s{i}" for i in range(len(cols))], np.column_stack(cols))


def partition(assign: ClusterAssignment) -> set[frozenset]:
    return {frozenset(assign.members(k)) for k in range(assign.K)}


def test_constant_series_features():
    (fv,) = extract_features(block([5, 5, 5, 5]))
    np.testing.assert_array_equal(fv.values, [5, 5, 5, 5, 0])


def test_small_series_features_use_sample_variance():
    (fv,) = extract_features(block([1, 2, 3, 4]))
    np.testing.assert_allclose(fv.values, [2.5, 4, 1, 2.5, 5 / 3], rtol=0, atol=1e-15)


def test_thirty_day_history_features():
    data = feeder_dataset()
    assert data.horizon == 1440
    feats = extract_features(data)
    assert [f.sensor for f in feats] == data.sensors
    for f in feats:
        mean, hi, lo, med, var = f.values
        assert lo <= med <= hi and lo <= mean <= hi
        assert var >= 0
        assert np.isfinite(f.values).all()


def test_features_reject_short_or_missing_history():
    with pytest.raises(ValueError):
        extract_features(block([1.0]))
    with pytest.raises(ValueError):
        extract_features(block([1.0, np.nan, 2.0]))


@pytest.mark.parametrize("n,expected", [(10, [2] * 5), (11, [2, 2, 2, 2, 3])])
def test_balance(n, expected):
    rng = np.random.default_rng(n)
    feats = [FeatureVector(f"s{i:02d}", rng.normal(size=5)) for i in range(n)]
    a = cluster_balanced(feats, K=5, seed=1)
    assert sorted(a.sizes()) == expected
    assert set(a.membership) == {f.sensor for f in feats}


def test_k_larger_than_n_rejected():
    feats = [FeatureVector(f"s{i}", np.zeros(5)) for i in range(3)]
    with pytest.raises(ValueError):
        cluster_balanced(feats, K=4)


def test_identical_features_still_balanced():
    feats = [FeatureVector(f"s{i}", np.ones(5)) for i in range(7)]
    a = cluster_balanced(feats, K=3)
    assert sorted(a.sizes()) == [2, 2, 3]


SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])


def brute_force_balanced(points, K):
    n = len(points)
    best = np.inf
    for labels in itertools.product(range(K), repeat=n):
        sizes = np.bincount(labels, minlength=K)
        if sizes.min() >= n // K and sizes.max() <= -(-n // K):
            best = min(best, kmeans_cost(points, np.array(labels), K))
    return best


@pytest.mark.parametrize("seed", range(4))
def test_square_matches_brute_force(seed):
    a = cluster_balanced(SQUARE, K=2, seed=seed, standardize_features=False,
                         sensors=["a", "b", "c", "d"])
    assert a.cost == pytest.approx(brute_force_balanced(SQUARE, 2), abs=1e-12)
    # adjacent corners pair up: cost 2 * (0.25 + 0.25)
    assert a.cost == pytest.approx(1.0)


def test_cost_history_is_monotone():
    rng = np.random.default_rng(3)
    pts = np.vstack([rng.normal(c, 1.0, size=(8, 5)) for c in range(4)])
    a = cluster_balanced(pts, K=4, seed=2, sensors=[f"s{i:02d}" for i in range(len(pts))])
    h = np.array(a.history)
    assert len(h) >= 1
    assert np.all(h[1:] <= h[:-1] * (1 + 1e-9))


def test_deterministic_given_seed():
    feats = extract_features(feeder_dataset())
    a = cluster_balanced(feats, K=5, seed=11)
    b = cluster_balanced(feats, K=5, seed=11)
    assert a.membership == b.membership


def test_round_trip(tmp_path):
    a = cluster_balanced(extract_features(feeder_dataset()), K=5)
    a.save(tmp_path / "c.json")
    b = ClusterAssignment.load(tmp_path / "c.json")
    assert b.membership == a.membership
    np.testing.assert_allclose(b.centroids, a.centroids)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(4, 20), st.integers(1, 4))
def test_permutation_invariance(seed, n, K):
    rng = np.random.default_rng(seed)
    feats = [FeatureVector(f"s{i:02d}", rng.normal(size=5)) for i in range(n)]
    shuffled = [feats[i] for i in rng.permutation(n)]
    a = cluster_balanced(feats, K=K, seed=7)
    b = cluster_balanced(shuffled, K=K, seed=7)
    assert partition(a) == partition(b)
    sizes = a.sizes()
    assert min(sizes) >= n // K and max(sizes) <= -(-n // K)

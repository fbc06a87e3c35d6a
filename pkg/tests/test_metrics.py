import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from commrec.metrics import (
    ErrorAccumulator,
    MetricTriple,
    RecoveryReport,
    improvement,
    score,
)


def test_perfect_recovery_scores_zero():
    t = np.arange(1.0, 7.0).reshape(2, 3)
    m = np.array([[True, False, True], [False, True, True]])
    r = score(t, t.copy(), m)
    assert (r.mae, r.rmse, r.mape, r.n_missing) == (0.0, 0.0, 0.0, 2)


def test_two_cell_hand_computation():
    truth = np.array([[10.0, 20.0, 5.0]])
    recovered = np.array([[11.0, 19.0, 5.0]])
    mask = np.array([[False, False, True]])
    r = score(truth, recovered, mask)
    assert r.mae == pytest.approx(1.0)
    assert r.rmse == pytest.approx(1.0)
    assert r.mape == pytest.approx(7.5)


def test_observed_cells_are_ignored():
    rng = np.random.default_rng(0)
    t = rng.normal(size=(20, 5))
    r = t + rng.normal(scale=0.1, size=t.shape)
    m = rng.random(t.shape) > 0.3
    base = score(t, r, m)
    r2 = r.copy()
    r2[m] += 100.0
    assert score(t, r2, m) == base


def test_mape_guard_excludes_tiny_truths():
    t = np.array([[0.0, 2.0]])
    r = np.array([[0.5, 3.0]])
    out = score(t, r, np.zeros_like(t, dtype=bool))
    assert out.n_mape_excluded == 1
    assert out.mape == pytest.approx(50.0)
    only_zero = score(np.zeros((1, 1)), np.ones((1, 1)), np.zeros((1, 1), dtype=bool))
    assert np.isnan(only_zero.mape)


def test_no_missing_entries_is_an_error():
    with pytest.raises(ValueError):
        score(np.ones((2, 2)), np.ones((2, 2)), np.ones((2, 2), dtype=bool))


def test_shape_mismatch():
    with pytest.raises(ValueError):
        score(np.ones((2, 2)), np.ones((2, 3)), np.zeros((2, 2), dtype=bool))


def test_improvement_arithmetic():
    assert improvement(0.002580, 0.002784) == pytest.approx(7.33, abs=0.01)
    assert improvement(2.315946, 2.659312) == pytest.approx(12.91, abs=0.01)
    assert improvement(1.0, 1.0) == 0.0
    assert improvement(2.0, 1.0) < 0
    with pytest.raises(ZeroDivisionError):
        improvement(1.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=50))
def test_mae_never_exceeds_rmse(errors):
    e = np.array(errors)
    t = np.full((1, e.size), 5.0)
    r = score(t, t + e, np.zeros_like(t, dtype=bool))
    assert r.mae <= r.rmse * (1 + 1e-12) + 1e-300


def test_pooled_equals_count_weighted_mean():
    rng = np.random.default_rng(1)
    accs = []
    for n in (3, 10, 7):
        a = ErrorAccumulator()
        t = rng.uniform(1, 2, n)
        a.add(t, t + rng.normal(size=n))
        accs.append(a)
    pooled = ErrorAccumulator()
    for a in accs:
        pooled.merge(a)
    rows = [a.result() for a in accs]
    weighted = sum(r.mae * r.n_missing for r in rows) / sum(r.n_missing for r in rows)
    assert pooled.result().mae == pytest.approx(weighted, rel=1e-12)


def make_report():
    def row(mae, n):
        return MetricTriple(mae, mae * 1.2, mae * 100, n)

    per = {
        "proposed": {0: row(1.0, 10), 1: row(3.0, 30)},
        "baseline1": {0: row(2.0, 10), 1: row(3.0, 30)},
    }
    comb = {
        "proposed": MetricTriple(2.5, 3.0, 250.0, 40),
        "baseline1": MetricTriple(2.75, 3.3, 275.0, 40),
    }
    return RecoveryReport(["proposed", "baseline1"], per, comb, {"seed": 0})


def test_report_both_aggregations():
    rep = make_report()
    imp = rep.improvements()["baseline1"]
    assert imp["pooled"]["mae"] == pytest.approx(100 * 0.25 / 2.75)
    assert imp["cluster_mean"]["mae"] == pytest.approx(100 * (2.5 - 2.0) / 2.5)
    assert imp["per_cluster_mae"] == {"0": pytest.approx(50.0), "1": pytest.approx(0.0)}


def test_report_serialization(tmp_path):
    rep = make_report()
    doc = json.loads(rep.to_json())
    assert doc["combined"]["proposed"]["mae"] == 2.5
    assert doc["combined_cluster_mean"]["baseline1"]["mae"] == pytest.approx(2.5)
    rep.write_csv(tmp_path / "r.csv")
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert [(r["method"], r["cluster"]) for r in rows] == [
        ("proposed", "0"), ("proposed", "1"), ("proposed", "combined"),
        ("baseline1", "0"), ("baseline1", "1"), ("baseline1", "combined"),
    ]

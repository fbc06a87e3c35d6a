import csv
import json

import numpy as np
import pytest

from commrec.fixtures import feeder_dataset, feeder_document
from commrec.measurements import read_mask, read_measurements, write_measurements
from commrec.osvt import OsvtConfig
from commrec.pipeline import RunConfig, make_scenario, prepare, recover_cluster, run_experiment


def small_config(tmp_path, **kw):
    params = dict(output_dir=str(tmp_path / "out"), trials=2, seed=3)
    params.update(kw)
    return RunConfig(**params)


def test_vacuous_run_without_failures(tmp_path):
    cfg = small_config(tmp_path, trials=1, no_failures=True)
    report = run_experiment(cfg)
    assert all(v is None for v in report.combined.values())
    assert any("no missing entries" in n for n in report.meta["notices"])
    assert (tmp_path / "out" / "report.json").exists()


def test_artifacts_and_shared_masks(tmp_path):
    cfg = small_config(tmp_path, export_series=["v701"])
    report = run_experiment(cfg)
    out = tmp_path / "out"
    for name in ["report.json", "report.csv", "plan.json", "plan_baseline.json", "clusters.json",
                 "scenarios/trial_0000.jsonl", "recovered/proposed.csv", "series_v701.csv"]:
        assert (out / name).exists(), name
    b1 = read_mask(out / "recovered" / "baseline1_mask.csv").delivered
    b2 = read_mask(out / "recovered" / "baseline2_mask.csv").delivered
    p = read_mask(out / "recovered" / "proposed_mask.csv").delivered
    np.testing.assert_array_equal(b1, b2)
    assert not np.array_equal(p, b1)
    assert report.combined["baseline1"].n_missing == report.combined["baseline2"].n_missing


def test_recovered_series_keep_observed_values(tmp_path):
    run_experiment(small_config(tmp_path, trials=1))
    out = tmp_path / "out" / "recovered"
    truth = feeder_dataset()
    for method in ("proposed", "baseline1", "baseline2"):
        rec = read_measurements(out / f"{method}.csv").select(truth.sensors)
        mask = read_mask(out / f"{method}_mask.csv").select(truth.sensors).delivered
        np.testing.assert_allclose(rec.values[mask], truth.values[mask], rtol=1e-9)
        assert np.isfinite(rec.values).all()


def test_exported_series_columns(tmp_path):
    run_experiment(small_config(tmp_path, trials=1, export_series=["v701"],
                                methods=["proposed", "baseline2"]))
    rows = list(csv.reader(open(tmp_path / "out" / "series_v701.csv")))
    assert rows[0] == ["timestamp", "truth", "reported", "recovered_proposed", "recovered_baseline2"]
    assert len(rows) == 1441
    blanks = [r for r in rows[1:] if r[2] == ""]
    assert blanks, "some samples should be missing"
    for r in rows[1:]:
        if r[2]:
            assert float(r[2]) == float(r[1])


def test_scenario_shared_across_methods(tmp_path):
    cfg = small_config(tmp_path)
    setup = prepare(cfg)
    a = make_scenario(cfg, setup.net, 48, 1)
    b = make_scenario(cfg, setup.net, 48, 1)
    assert all(np.array_equal(x, y) for x, y in zip(a.failed, b.failed))
    assert a.seed == cfg.seed + 1


def test_prepared_plans_honor_cap(tmp_path):
    from commrec.network import check_plan

    setup = prepare(small_config(tmp_path))
    assert check_plan(setup.plans["constrained"]) == []
    assert sorted(setup.clusters.sizes()) == [7] * 5


def test_report_is_byte_identical_across_runs_and_workers(tmp_path):
    a = small_config(tmp_path / "a", trials=4)
    b = small_config(tmp_path / "b", trials=4, workers=2)
    run_experiment(a)
    run_experiment(b)
    assert (tmp_path / "a/out/report.json").read_bytes() == (tmp_path / "b/out/report.json").read_bytes()


def test_csv_and_topology_inputs(tmp_path):
    doc = feeder_document()
    (tmp_path / "topo.json").write_text(json.dumps(doc))
    write_measurements(tmp_path / "data.csv", feeder_dataset())
    (tmp_path / "cfg.json").write_text(json.dumps({
        "measurements": "data.csv", "topology": "topo.json", "trials": 1,
        "output_dir": str(tmp_path / "out"), "methods": ["proposed"],
    }))
    cfg = RunConfig.from_file(tmp_path / "cfg.json", seed=5)
    assert cfg.seed == 5
    report = run_experiment(cfg, write=False)
    assert report.combined["proposed"].n_missing > 0


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(methods=["proposed", "magic"])
    with pytest.raises(ValueError):
        RunConfig(trials=0)
    with pytest.raises(ValueError):
        RunConfig(osvt={"mode": "nope"})


def test_recover_cluster_leaves_remainder_and_observed_cells():
    t = np.arange(100.0)
    x = np.column_stack([1 + 0.05 * np.sin(2 * np.pi * t / 48 + p) for p in (0, 1, 2)])
    delivered = np.ones_like(x, dtype=bool)
    delivered[[5, 60, 97], [0, 1, 2]] = False
    for method in ("proposed", "baseline2"):
        est, diag = recover_cluster(x, delivered, method, 8, 6, OsvtConfig())
        assert np.isnan(est[97, 2])
        np.testing.assert_array_equal(est[delivered], x[delivered])
        assert np.isfinite(est[5, 0]) and np.isfinite(est[60, 1])
        assert diag["blocks"] == 2


def test_whole_tile_lost_is_flagged():
    x = np.ones((48, 2)) + np.arange(48)[:, None] * 0.001
    delivered = np.zeros_like(x, dtype=bool)
    _, diag = recover_cluster(x, delivered, "proposed", 8, 6, OsvtConfig())
    assert diag["unrecoverable"] == 1

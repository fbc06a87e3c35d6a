import json
import os
import subprocess
import sys

import pytest

from commrec.cli import main
from commrec.measurements import read_measurements
from commrec.network import LdstPlan
from commrec.pipeline import WORKERS_ENV


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    (d / "cfg.json").write_text(json.dumps({"trials": 50, "seed": 1, "output_dir": str(d / "ignored")}))
    rc = main(["run", "--config", str(d / "cfg.json"), "--trials", "2", "--seed", "4",
               "--out", str(d / "out"), "--methods", "proposed,baseline1",
               "--export-series", "v702"])
    assert rc == 0
    return d


def test_run_overrides(run_dir):
    report = json.loads((run_dir / "out" / "report.json").read_text())
    assert report["methods"] == ["proposed", "baseline1"]
    assert report["meta"]["config"]["trials"] == 2
    assert report["meta"]["config"]["seed"] == 4
    assert not (run_dir / "ignored").exists()
    assert (run_dir / "out" / "series_v702.csv").exists()


def test_validate_exported_plan(run_dir, capsys):
    assert main(["validate-plan", str(run_dir / "out" / "plan.json")]) == 0
    assert "OK" in capsys.readouterr().out


def test_validate_flags_shared_link(run_dir, tmp_path, capsys):
    plan = LdstPlan.load(run_dir / "out" / "plan.json")
    plan.trees[1].append(plan.trees[0][0])
    plan.save(tmp_path / "bad.json")
    assert main(["validate-plan", str(tmp_path / "bad.json")]) == 1
    assert "link-disjointness" in capsys.readouterr().out


def test_validate_flags_cap(run_dir, capsys):
    # the baseline plan piles cluster members onto shared trees
    assert main(["validate-plan", str(run_dir / "out" / "plan_baseline.json"), "--alpha", "0.3"]) == 1
    assert "spreading cap" in capsys.readouterr().out


def test_validate_unreadable(tmp_path):
    (tmp_path / "x.json").write_text("{")
    assert main(["validate-plan", str(tmp_path / "x.json")]) == 2


def test_score(run_dir, tmp_path, capsys):
    assert main(["gen", "--out", str(tmp_path / "truth.csv")]) == 0
    capsys.readouterr()
    rec = run_dir / "out" / "recovered"
    rc = main(["score", "--truth", str(tmp_path / "truth.csv"), "--recovered", str(rec / "proposed.csv"),
               "--mask", str(rec / "proposed_mask.csv")])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert out["n_missing"] > 0 and 0 < out["mae"] <= out["rmse"]


def test_gen_with_spec(tmp_path):
    (tmp_path / "spec.json").write_text(json.dumps({"n_sensors": 4, "n_groups": 2, "horizon": 96}))
    assert main(["gen", "--spec", str(tmp_path / "spec.json"), "--out", str(tmp_path / "g.csv"),
                 "--seed", "9"]) == 0
    blk = read_measurements(tmp_path / "g.csv")
    assert blk.values.shape == (96, 4)


def test_bad_config_exits_nonzero(tmp_path):
    (tmp_path / "cfg.json").write_text(json.dumps({"methods": ["nope"]}))
    assert main(["run", "--config", str(tmp_path / "cfg.json")]) == 2


def test_module_entry_point_with_worker_env(tmp_path):
    (tmp_path / "cfg.json").write_text(json.dumps({"trials": 3, "output_dir": str(tmp_path / "o")}))
    env = {**os.environ, WORKERS_ENV: "2"}
    proc = subprocess.run([sys.executable, "-m", "commrec.cli", "run", "--config", str(tmp_path / "cfg.json")],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 0, proc.stderr
    assert "improvement vs baseline1" in proc.stdout

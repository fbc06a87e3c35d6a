"""End-to-end experiment: cluster, route, fail, recover and score.

Three methods share every failure scenario:

- ``proposed``: capped LDST routing, Page matrix + OSVT per cluster.
- ``baseline1``: uncapped routing, Page matrix + OSVT per cluster.
- ``baseline2``: uncapped routing, OSVT on the raw time x sensor block.
"""
from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from commrec.clustering import ClusterAssignment, cluster_balanced, extract_features
from commrec.datagen import SynthSpec, generate
from commrec.failures import derive_mask, no_failures, sample_failures
from commrec.fixtures import feeder_document, feeder_spec
from commrec.measurements import (
    MeasurementBlock,
    ObservationMask,
    read_measurements,
    write_mask,
    write_measurements,
)
from commrec.metrics import ErrorAccumulator, RecoveryReport
from commrec.network import CommNetwork, LdstPlan, build_ldst_plan, build_unconstrained_plan, load_network
from commrec import osvt
from commrec.osvt import OsvtConfig, recover
from commrec.page import block_slices, from_page, to_page

log = logging.getLogger(__name__)

METHODS = ("proposed", "baseline1", "baseline2")
WORKERS_ENV = "COMMREC_WORKERS"


@dataclass
class RunConfig:
    """Experiment parameters. Paths are resolved against ``base_dir``.

    Without ``measurements`` the data come from ``synth`` (defaults to the
    feeder-shaped voltage fixture); without ``topology`` the bundled feeder
    network is used.
    """

    output_dir: str = "out"
    measurements: str | None = None
    topology: str | None = None
    history: str | None = None
    synth: dict | None = None
    family: str = "voltage"
    K: int = 5
    alpha: float | dict = 0.3
    L: int = 8
    W: int = 6
    f_max: int = 5
    fixed_count: bool = False
    burst_len: int = 1
    no_failures: bool = False
    trials: int = 200
    seed: int = 0
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    tree_count: int | str = "auto"
    osvt: dict = field(default_factory=dict)
    export_series: list[str] = field(default_factory=list)
    scenarios: str = "first"
    workers: int | None = None
    base_dir: str = "."

    def __post_init__(self):
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.scenarios not in ("all", "first", "none"):
            raise ValueError("scenarios must be 'all', 'first' or 'none'")
        OsvtConfig(**self.osvt)

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "RunConfig":
        path = Path(path)
        doc = json.loads(path.read_text())
        doc.setdefault("base_dir", str(path.parent))
        doc.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**doc)

    def resolve(self, p: str | None) -> Path | None:
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def public_dict(self) -> dict:
        """Config echo for the report; omits machine-specific fields."""
        d = asdict(self)
        for key in ("output_dir", "base_dir", "workers"):
            d.pop(key)
        return d


@dataclass
class Setup:
    truth: MeasurementBlock
    net: CommNetwork
    clusters: ClusterAssignment
    plans: dict[str, LdstPlan]


def prepare(config: RunConfig) -> Setup:
    """Load data and topology, cluster the sensors and build both routing plans."""
    if config.topology is not None:
        net = load_network(config.resolve(config.topology).read_text())
    else:
        net = load_network(feeder_document())
    if config.measurements is not None:
        truth = read_measurements(config.resolve(config.measurements))
    else:
        spec = feeder_spec(**(config.synth or {})) if config.topology is None else SynthSpec(**(config.synth or {}))
        truth = generate(spec)
    if not np.isfinite(truth.values).all():
        raise ValueError("ground-truth measurements must be complete")
    missing_sites = [s for s in truth.sensors if s not in net.sensor_sites]
    if missing_sites:
        raise ValueError(f"sensors without a network site: {missing_sites}")

    history = truth if config.history is None else read_measurements(config.resolve(config.history))
    history = history.select(truth.sensors)
    clusters = cluster_balanced(extract_features(history), K=config.K, seed=config.seed)

    plans = {
        "constrained": build_ldst_plan(net, clusters, config.alpha, config.tree_count, config.seed),
        "unconstrained": build_unconstrained_plan(net, clusters, config.tree_count, config.seed),
    }
    return Setup(truth, net, clusters, plans)


def _plan_for(method: str) -> str:
    return "constrained" if method == "proposed" else "unconstrained"


def recover_cluster(
    values: np.ndarray, delivered: np.ndarray, method: str, L: int, W: int, cfg: OsvtConfig
) -> tuple[np.ndarray, dict]:
    """Recover one cluster's T x N_k block, tile by tile; returns (estimate, diagnostics).

    Remainder samples past the last full tile are returned as observed.
    """
    T, n = values.shape
    est = np.where(delivered, values, np.nan)
    diag = {"blocks": 0, "iterations": 0, "not_converged": 0, "unrecoverable": 0}
    sensors = [str(i) for i in range(n)]
    for sl in block_slices(T, L, W):
        m = delivered[sl]
        if m.all():
            continue
        diag["blocks"] += 1
        x = values[sl]
        if not m.any():
            diag["unrecoverable"] += 1
            continue
        if method == "baseline2":
            res = recover(np.where(m, x, np.nan), cfg, mask=m)
            est[sl] = res.reconstruction
        else:
            pair, layout = to_page(MeasurementBlock(sensors, x), ObservationMask(sensors, m), L, W)
            res = recover(pair, cfg)
            est[sl] = from_page(res.reconstruction, layout).values
        diag["iterations"] += res.iterations
        diag["not_converged"] += int(not res.converged)
    return est, diag


def _fill_unrecoverable(est: np.ndarray, values: np.ndarray, delivered: np.ndarray) -> np.ndarray:
    # whole tile lost: fall back to each sensor's observed mean in this trial
    holes = np.isnan(est)
    if holes.any():
        obs_mean = np.nanmean(np.where(delivered, values, np.nan), axis=0)
        obs_mean = np.where(np.isfinite(obs_mean), obs_mean, np.nanmean(obs_mean))
        est = np.where(holes, obs_mean[None, :], est)
    return est


def make_scenario(config: RunConfig, net: CommNetwork, horizon: int, trial: int):
    """Failure scenario of one trial; its seed is the master seed plus the trial index."""
    if config.no_failures:
        return no_failures(net, horizon, seed=config.seed + trial)
    return sample_failures(net, horizon, config.f_max, seed=config.seed + trial,
                           fixed_count=config.fixed_count, burst_len=config.burst_len)


_CTX: dict = {}


def _init_worker(ctx):
    _CTX.clear()
    _CTX.update(ctx)


def _run_trial(trial: int, keep: bool = False):
    c = _CTX
    config: RunConfig = c["config"]
    setup: Setup = c["setup"]
    truth = setup.truth
    T = truth.horizon
    used = (T // (config.L * config.W)) * config.L * config.W
    scenario = make_scenario(config, setup.net, T, trial)
    masks = {
        name: derive_mask(scenario, plan, truth.sensors) for name, plan in setup.plans.items()
    }
    cfg = OsvtConfig(**config.osvt)
    acc: dict[str, dict[int, ErrorAccumulator]] = {}
    diag = {m: {"blocks": 0, "iterations": 0, "not_converged": 0, "unrecoverable": 0}
            for m in config.methods}
    recovered = {}
    for method in config.methods:
        mask = masks[_plan_for(method)].delivered
        full = np.where(mask, truth.values, np.nan)
        acc[method] = {}
        for k in range(setup.clusters.K):
            cols = [truth.sensors.index(s) for s in setup.clusters.members(k)]
            x = truth.values[:, cols]
            m = mask[:, cols]
            est, d = recover_cluster(x, m, method, config.L, config.W, cfg)
            est[:used] = _fill_unrecoverable(est[:used], x[:used], m[:used])
            for key in d:
                diag[method][key] += d[key]
            miss = ~m[:used]
            a = ErrorAccumulator()
            a.add(x[:used][miss], est[:used][miss])
            acc[method][k] = a
            full[:, cols] = est
        if keep:
            recovered[method] = full
    missing_rate = {name: float(1.0 - m.delivered.mean()) for name, m in masks.items()}
    out = {"trial": trial, "acc": acc, "diag": diag, "missing_rate": missing_rate}
    if keep:
        out["scenario"] = scenario
        out["masks"] = masks
        out["recovered"] = recovered
    return out


def _worker_count(config: RunConfig) -> int:
    if config.workers is not None:
        return max(1, int(config.workers))
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def run_experiment(config: RunConfig, write: bool = True) -> RecoveryReport:
    """Run all trials and return the aggregated report; artifacts go to ``output_dir``."""
    setup = prepare(config)
    truth = setup.truth
    T = truth.horizon
    block = config.L * config.W
    remainder = T - (T // block) * block
    if remainder:
        log.info("%d trailing samples do not fill a %d-sample tile and are not scored", remainder, block)

    ctx = {"config": config, "setup": setup}
    workers = _worker_count(config)
    results = []
    _init_worker(ctx)
    first = _run_trial(0, keep=True)
    results.append(first)
    rest = range(1, config.trials)
    if workers > 1 and len(rest):
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(ctx,)) as pool:
            results.extend(pool.map(_run_trial, rest, chunksize=max(1, len(rest) // (4 * workers))))
    else:
        results.extend(_run_trial(t) for t in rest)
    results.sort(key=lambda r: r["trial"])

    report = _aggregate(config, setup, results, remainder)
    if write:
        _write_artifacts(config, setup, report, first, results)
    return report


def _aggregate(config, setup, results, remainder) -> RecoveryReport:
    K = setup.clusters.K
    per_cluster = {}
    combined = {}
    diag = {}
    for method in config.methods:
        pooled = ErrorAccumulator()
        rows = {}
        for k in range(K):
            a = ErrorAccumulator()
            for r in results:
                a.merge(r["acc"][method][k])
            rows[k] = a.result() if a.n else None
            pooled.merge(a)
        per_cluster[method] = rows
        combined[method] = pooled.result() if pooled.n else None
        diag[method] = {
            key: int(sum(r["diag"][method][key] for r in results))
            for key in ("blocks", "iterations", "not_converged", "unrecoverable")
        }

    notices = []
    if all(v is None for v in combined.values()):
        notices.append("no missing entries in any trial; metrics skipped")
    for method, d in diag.items():
        if d["unrecoverable"]:
            notices.append(f"{method}: {d['unrecoverable']} tiles had no observed entry "
                           f"and were filled with per-sensor observed means")

    missing = {
        name: float(np.mean([r["missing_rate"][name] for r in results])) for name in setup.plans
    }
    meta = {
        "config": config.public_dict(),
        "backend": osvt.BACKEND,
        "horizon": setup.truth.horizon,
        "unscored_remainder_samples": remainder,
        "clusters": {str(k): setup.clusters.members(k) for k in range(setup.clusters.K)},
        "tree_count": setup.plans["constrained"].tree_count,
        "mean_missing_rate": missing,
        "recovery_diagnostics": diag,
        "notices": notices,
    }
    for n in notices:
        log.warning(n)
    return RecoveryReport(list(config.methods), per_cluster, combined, meta)


def _write_artifacts(config, setup, report, first, results) -> None:
    out = Path(config.output_dir)
    (out / "scenarios").mkdir(parents=True, exist_ok=True)
    (out / "recovered").mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json() + "\n")
    report.write_csv(out / "report.csv")
    setup.plans["constrained"].save(out / "plan.json")
    setup.plans["unconstrained"].save(out / "plan_baseline.json")
    setup.clusters.save(out / "clusters.json")

    if config.scenarios != "none":
        first["scenario"].to_jsonl(out / "scenarios" / "trial_0000.jsonl")
    if config.scenarios == "all":
        for r in results[1:]:
            scn = make_scenario(config, setup.net, setup.truth.horizon, r["trial"])
            scn.to_jsonl(out / "scenarios" / f"trial_{r['trial']:04d}.jsonl")

    truth = setup.truth
    for method, values in first["recovered"].items():
        write_measurements(out / "recovered" / f"{method}.csv",
                           MeasurementBlock(truth.sensors, values, truth.timestamps))
        write_mask(out / "recovered" / f"{method}_mask.csv",
                   first["masks"][_plan_for(method)], truth.timestamps)
    for sensor in config.export_series:
        export_series(out / f"series_{sensor}.csv", sensor, truth, first)


def export_series(path, sensor: str, truth: MeasurementBlock, trial: dict) -> None:
    """Truth, reported and recovered values of one sensor.

    ``reported`` follows the capped routing plan and is blank where missing.
    """
    if sensor not in truth.sensors:
        raise KeyError(f"unknown sensor {sensor!r}")
    j = truth.sensors.index(sensor)
    methods = list(trial["recovered"])
    reported_mask = trial["masks"]["constrained"].delivered[:, j]
    stamps = truth.timestamps or [str(t) for t in range(truth.horizon)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "truth", "reported", *(f"recovered_{m}" for m in methods)])
        for t in range(truth.horizon):
            rep = repr(float(truth.values[t, j])) if reported_mask[t] else ""
            rec = [repr(float(trial["recovered"][m][t, j])) for m in methods]
            w.writerow([stamps[t], repr(float(truth.values[t, j])), rep, *rec])

"""Recovery error metrics over missing entries only."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAPE_EPS = 1e-6


@dataclass
class MetricTriple:
    mae: float
    rmse: float
    mape: float
    n_missing: int
    n_mape_excluded: int = 0

    def as_dict(self) -> dict:
        return {
            "mae": self.mae,
            "rmse": self.rmse,
            "mape": self.mape,
            "n_missing": self.n_missing,
            "n_mape_excluded": self.n_mape_excluded,
        }


@dataclass
class ErrorAccumulator:
    """Running sums so metrics can be pooled across blocks, clusters and trials."""

    n: int = 0
    abs_sum: float = 0.0
    sq_sum: float = 0.0
    pct_sum: float = 0.0
    pct_n: int = 0

    def add(self, truth: np.ndarray, recovered: np.ndarray, eps: float = MAPE_EPS) -> None:
        truth = np.asarray(truth, dtype=float).ravel()
        err = np.asarray(recovered, dtype=float).ravel() - truth
        self.n += err.size
        self.abs_sum += float(np.abs(err).sum())
        self.sq_sum += float((err * err).sum())
        ok = np.abs(truth) >= eps
        self.pct_sum += float(np.abs(err[ok] / truth[ok]).sum())
        self.pct_n += int(ok.sum())

    def merge(self, other: "ErrorAccumulator") -> None:
        self.n += other.n
        self.abs_sum += other.abs_sum
        self.sq_sum += other.sq_sum
        self.pct_sum += other.pct_sum
        self.pct_n += other.pct_n

    def result(self) -> MetricTriple:
        if self.n == 0:
            raise ValueError("no missing entries to score")
        mape = 100.0 * self.pct_sum / self.pct_n if self.pct_n else float("nan")
        return MetricTriple(
            mae=self.abs_sum / self.n,
            rmse=math.sqrt(self.sq_sum / self.n),
            mape=mape,
            n_missing=self.n,
            n_mape_excluded=self.n - self.pct_n,
        )


def score(truth, recovered, mask, eps: float = MAPE_EPS) -> MetricTriple:
    """MAE, RMSE and MAPE (%) over cells where ``mask`` is False.

    Arguments may be arrays or MeasurementBlock/ObservationMask objects.
    MAPE skips cells with |truth| < eps and is NaN if all are skipped.
    """
    t = np.asarray(getattr(truth, "values", truth), dtype=float)
    r = np.asarray(getattr(recovered, "values", recovered), dtype=float)
    m = np.asarray(getattr(mask, "delivered", mask), dtype=bool)
    if t.shape != r.shape or t.shape != m.shape:
        raise ValueError(f"shape mismatch: truth {t.shape}, recovered {r.shape}, mask {m.shape}")
    miss = ~m
    if not miss.any():
        raise ValueError("no missing entries to score")
    acc = ErrorAccumulator()
    acc.add(t[miss], r[miss], eps)
    return acc.result()


def improvement(proposed: float, baseline: float) -> float:
    """Percent reduction of ``proposed`` relative to ``baseline`` (negative if worse)."""
    if baseline == 0:
        raise ZeroDivisionError("baseline metric is zero")
    return 100.0 * (baseline - proposed) / baseline


@dataclass
class RecoveryReport:
    """Per-method, per-cluster metrics plus pooled and cluster-averaged combined rows."""

    methods: list[str]
    per_cluster: dict[str, dict[int, MetricTriple | None]]
    combined: dict[str, MetricTriple | None]
    meta: dict = field(default_factory=dict)

    def combined_mean(self, method: str) -> dict | None:
        """Unweighted mean of the per-cluster rows."""
        rows = [m for m in self.per_cluster[method].values() if m is not None]
        if not rows:
            return None
        return {
            "mae": float(np.mean([r.mae for r in rows])),
            "rmse": float(np.mean([r.rmse for r in rows])),
            "mape": float(np.mean([r.mape for r in rows])),
        }

    def improvements(self, proposed: str = "proposed") -> dict:
        out = {}
        if proposed not in self.combined or self.combined[proposed] is None:
            return out
        p = self.combined[proposed]
        pm = self.combined_mean(proposed)
        for base in self.methods:
            if base == proposed or self.combined.get(base) is None:
                continue
            b = self.combined[base]
            bm = self.combined_mean(base)
            entry = {
                "pooled": {k: improvement(getattr(p, k), getattr(b, k)) for k in ("mae", "rmse", "mape")},
                "cluster_mean": {k: improvement(pm[k], bm[k]) for k in ("mae", "rmse", "mape")},
                "per_cluster_mae": {},
            }
            for k, row in sorted(self.per_cluster[proposed].items()):
                brow = self.per_cluster[base].get(k)
                if row is not None and brow is not None and brow.mae > 0:
                    entry["per_cluster_mae"][str(k)] = improvement(row.mae, brow.mae)
            out[base] = entry
        return out

    def to_dict(self) -> dict:
        def triple(t):
            return None if t is None else t.as_dict()

        return {
            "meta": self.meta,
            "methods": list(self.methods),
            "per_cluster": {
                m: {str(k): triple(v) for k, v in sorted(rows.items())}
                for m, rows in self.per_cluster.items()
            },
            "combined": {m: triple(v) for m, v in self.combined.items()},
            "combined_cluster_mean": {m: self.combined_mean(m) for m in self.methods},
            "improvement_pct": self.improvements(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True, allow_nan=True)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["method", "cluster", "mae", "rmse", "mape", "n_missing"])
            for m in self.methods:
                for k, t in sorted(self.per_cluster[m].items()):
                    if t is not None:
                        w.writerow([m, k, repr(t.mae), repr(t.rmse), repr(t.mape), t.n_missing])
                c = self.combined[m]
                if c is not None:
                    w.writerow([m, "combined", repr(c.mae), repr(c.rmse), repr(c.mape), c.n_missing])

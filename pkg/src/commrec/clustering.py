"""Balanced k-means over per-sensor summary statistics."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from commrec.measurements import MeasurementBlock

FEATURE_NAMES = ("mean", "max", "min", "median", "variance")


@dataclass
class FeatureVector:
    sensor: str
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)


@dataclass
class ClusterAssignment:
    """Sensor-to-cluster map. ``cost`` is the k-means objective in the clustered space."""

    K: int
    membership: dict[str, int]
    centroids: np.ndarray
    cost: float = float("nan")
    history: list[float] = field(default_factory=list, repr=False)
    iterations: int = 0

    def members(self, k: int) -> list[str]:
        return sorted(s for s, c in self.membership.items() if c == k)

    def sizes(self) -> list[int]:
        return [len(self.members(k)) for k in range(self.K)]

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "membership": dict(sorted(self.membership.items())),
            "centroids": np.asarray(self.centroids).tolist(),
            "cost": self.cost,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ClusterAssignment":
        return cls(
            K=int(doc["K"]),
            membership={str(s): int(k) for s, k in doc["membership"].items()},
            centroids=np.asarray(doc.get("centroids", []), dtype=float),
            cost=float(doc.get("cost", float("nan"))),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "ClusterAssignment":
        return cls.from_dict(json.loads(Path(path).read_text()))


def extract_features(history: MeasurementBlock) -> list[FeatureVector]:
    """Mean, max, min, median and sample variance of each sensor's history."""
    x = history.values
    if x.shape[0] < 2:
        raise ValueError("feature extraction needs at least 2 samples per sensor")
    if not np.isfinite(x).all():
        raise ValueError("history contains missing or non-finite values")
    stats = np.column_stack([
        x.mean(axis=0),
        x.max(axis=0),
        x.min(axis=0),
        np.median(x, axis=0),
        x.var(axis=0, ddof=1),
    ])
    return [FeatureVector(s, stats[i]) for i, s in enumerate(history.sensors)]


def standardize(z: np.ndarray) -> np.ndarray:
    """Column z-score; constant columns map to zero."""
    mu = z.mean(axis=0)
    sd = z.std(axis=0)
    sd[sd == 0] = 1.0
    return (z - mu) / sd


def kmeans_cost(points: np.ndarray, labels: np.ndarray, K: int) -> float:
    total = 0.0
    for k in range(K):
        p = points[labels == k]
        if len(p):
            total += float(((p - p.mean(axis=0)) ** 2).sum())
    return total


def _target_sizes(n: int, K: int) -> tuple[int, int]:
    return n // K, n % K


def _balanced_assign(d2: np.ndarray, K: int) -> np.ndarray:
    """Exact minimum-cost assignment with floor(N/K) or ceil(N/K) points per cluster.

    Each cluster owns floor(N/K) mandatory slots (bonus -big so all get filled)
    and one optional slot; the N mod K leftover points take optional slots.
    """
    n = d2.shape[0]
    base, extra = _target_sizes(n, K)
    big = 1.0 + n * float(d2.max(initial=0.0))
    cols = []
    for k in range(K):
        cols += [d2[:, k] - big] * base
        if extra:
            cols.append(d2[:, k])
    owner = [k for k in range(K) for _ in range(base + (1 if extra else 0))]
    cost = np.column_stack(cols)
    rows, picked = linear_sum_assignment(cost)
    labels = np.empty(n, dtype=int)
    labels[rows] = [owner[c] for c in picked]
    return labels


def _farthest_point_init(points: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    first = int(rng.integers(len(points)))
    chosen = [first]
    dmin = ((points - points[first]) ** 2).sum(axis=1)
    for _ in range(1, K):
        # argmax returns the lowest index on ties, i.e. lowest sensor id
        nxt = int(np.argmax(dmin))
        chosen.append(nxt)
        dmin = np.minimum(dmin, ((points - points[nxt]) ** 2).sum(axis=1))
    return points[chosen].copy()


def cluster_balanced(
    features,
    K: int = 5,
    seed: int = 0,
    standardize_features: bool = True,
    max_iter: int = 300,
    sensors: list[str] | None = None,
) -> ClusterAssignment:
    """Partition sensors into K clusters of size floor(N/K) or ceil(N/K).

    Parameters
    ----------
    features : list of FeatureVector, or an (N, d) array together with ``sensors``
    K : number of clusters
    seed : picks the first initial centroid; the rest are farthest points
    standardize_features : z-score each feature across sensors first

    Alternates an exact balanced assignment with centroid updates, so the
    k-means cost never increases between rounds.
    """
    if isinstance(features, np.ndarray):
        z = np.asarray(features, dtype=float)
        ids = list(sensors) if sensors is not None else [f"{i:06d}" for i in range(len(z))]
    else:
        ids = [f.sensor for f in features]
        z = np.array([f.values for f in features], dtype=float)
    n = len(ids)
    if K < 1:
        raise ValueError("K must be positive")
    if K > n:
        raise ValueError(f"K={K} exceeds the number of sensors ({n})")
    if not np.isfinite(z).all():
        raise ValueError("features must be finite")

    # canonical order makes the result independent of input order
    order = sorted(range(n), key=lambda i: ids[i])
    ids = [ids[i] for i in order]
    pts = z[order]
    if standardize_features:
        pts = standardize(pts)

    rng = np.random.default_rng(seed)
    centroids = _farthest_point_init(pts, K, rng)
    labels = None
    history: list[float] = []
    it = 0
    for it in range(1, max_iter + 1):
        d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new = _balanced_assign(d2, K)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        centroids = np.array([pts[labels == k].mean(axis=0) for k in range(K)])
        history.append(kmeans_cost(pts, labels, K))

    labels = _canonical_labels(labels, K)
    centroids = np.array([pts[labels == k].mean(axis=0) for k in range(K)])
    return ClusterAssignment(
        K=K,
        membership={ids[i]: int(labels[i]) for i in range(n)},
        centroids=centroids,
        cost=kmeans_cost(pts, labels, K),
        history=history,
        iterations=it,
    )


def _canonical_labels(labels: np.ndarray, K: int) -> np.ndarray:
    """Relabel clusters by the first (lowest-id) member so labels are reproducible."""
    remap: dict[int, int] = {}
    for lab in labels:
        if lab not in remap:
            remap[int(lab)] = len(remap)
    return np.array([remap[int(lab)] for lab in labels])

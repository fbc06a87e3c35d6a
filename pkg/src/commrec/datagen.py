"""Synthetic measurement data with controllable low-rank cluster structure."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from commrec.measurements import MeasurementBlock

# periods in samples at 30-minute cadence: daily, ~half-daily (off-harmonic), weekly
_PERIODS = (48.0, 48.0 / 2.1, 336.0)


@dataclass
class SynthSpec:
    """Recipe for a synthetic measurement block.

    ``groups`` lists sensor ids per latent cluster; when omitted, ``n_sensors``
    sensors named ``s000``... are split into ``n_groups`` contiguous groups.
    Each group's sensors mix ``rank`` sinusoidal latent signals with
    positive weights, around a group level inside ``value_range``.
    """

    n_sensors: int = 30
    horizon: int = 1440
    rank: int = 2
    n_groups: int = 5
    groups: list[list[str]] | None = None
    noise: float = 0.0
    seed: int = 0
    value_range: tuple[float, float] = (0.95, 1.05)
    amplitude: float = 0.25
    trend: float = 0.05
    cadence_minutes: int = 30
    start: str = "2013-01-01T00:00:00"
    group_levels: list[float] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.groups is not None:
            self.groups = [[str(s) for s in g] for g in self.groups]
            self.n_groups = len(self.groups)
            self.n_sensors = sum(len(g) for g in self.groups)
        if self.n_sensors < 1 or self.horizon < 1:
            raise ValueError("n_sensors and horizon must be positive")
        if not 1 <= self.rank <= min(self.n_sensors, self.horizon):
            raise ValueError("rank must lie in [1, min(N, T)]")
        if self.rank > len(_PERIODS):
            raise ValueError(f"rank is limited to {len(_PERIODS)} latent signals")
        if self.noise < 0:
            raise ValueError("noise must be non-negative")
        if not 1 <= self.n_groups <= self.n_sensors:
            raise ValueError("n_groups must lie in [1, n_sensors]")
        lo, hi = self.value_range
        if not hi > lo:
            raise ValueError("value_range must be increasing")

    def group_lists(self) -> list[list[str]]:
        if self.groups is not None:
            return self.groups
        ids = [f"s{i:03d}" for i in range(self.n_sensors)]
        return [list(part) for part in np.array_split(ids, self.n_groups)]

    @classmethod
    def from_file(cls, path: str | Path) -> "SynthSpec":
        doc = json.loads(Path(path).read_text())
        if "value_range" in doc:
            doc["value_range"] = tuple(doc["value_range"])
        return cls(**doc)


def generate(spec: SynthSpec) -> MeasurementBlock:
    """Ground-truth block: per-group latent sinusoids, positive mixing, Gaussian noise.

    Amplitudes are fractions of the value-range span: ``amplitude`` for the
    periodic part and ``trend`` for the slow drift; noise is absolute.
    """
    rng = np.random.default_rng(spec.seed)
    groups = spec.group_lists()
    lo, hi = spec.value_range
    span = hi - lo
    t = np.arange(spec.horizon, dtype=float)
    G = len(groups)
    if spec.group_levels is not None:
        levels = np.asarray(spec.group_levels, dtype=float)
    else:
        levels = lo + span * (0.3 + 0.4 * (np.arange(G) + 0.5) / G)

    sensors: list[str] = []
    columns = []
    for g, members in enumerate(groups):
        base_phase = 2 * np.pi * g / G
        latent = np.array([
            np.sin(2 * np.pi * t / _PERIODS[j] + base_phase + rng.uniform(0, 0.5))
            for j in range(spec.rank)
        ])
        drift = spec.trend * span * rng.uniform(-1, 1) * (t / spec.horizon)
        for s in members:
            w = rng.uniform(0.5, 1.0, size=spec.rank) / spec.rank
            offset = rng.uniform(-0.02, 0.02) * span
            x = levels[g] + offset + drift + spec.amplitude * span * (w @ latent)
            if spec.noise > 0:
                x = x + rng.normal(0.0, spec.noise, size=spec.horizon)
            sensors.append(s)
            columns.append(x)

    start = datetime.fromisoformat(spec.start)
    step = timedelta(minutes=spec.cadence_minutes)
    stamps = [(start + i * step).isoformat() for i in range(spec.horizon)]
    return MeasurementBlock(sensors, np.column_stack(columns), stamps)

"""Measurement blocks, observation masks and their CSV forms.

The measurement CSV has a ``timestamp`` column followed by one column per
sensor. Masks use the same layout with 0/1 entries (1 = delivered).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class MeasurementBlock:
    """A T x N time-series matrix, one column per sensor."""

    sensors: list[str]
    values: np.ndarray
    timestamps: list[str] | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.sensors):
            raise ValueError(
                f"values shape {self.values.shape} does not match {len(self.sensors)} sensors"
            )
        if len(set(self.sensors)) != len(self.sensors):
            raise ValueError("duplicate sensor ids")
        if self.timestamps is not None and len(self.timestamps) != self.values.shape[0]:
            raise ValueError("timestamp count does not match row count")

    @property
    def horizon(self) -> int:
        return self.values.shape[0]

    def column(self, sensor: str) -> np.ndarray:
        return self.values[:, self.sensors.index(sensor)]

    def select(self, sensors: list[str]) -> "MeasurementBlock":
        idx = [self.sensors.index(s) for s in sensors]
        return MeasurementBlock(list(sensors), self.values[:, idx], self.timestamps)


@dataclass
class ObservationMask:
    """Boolean T x N matrix; True marks an entry delivered to the operating center."""

    sensors: list[str]
    delivered: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.delivered = np.asarray(self.delivered, dtype=bool)
        if self.delivered.ndim != 2 or self.delivered.shape[1] != len(self.sensors):
            raise ValueError("mask shape does not match sensor list")

    @property
    def missing(self) -> np.ndarray:
        return ~self.delivered

    def select(self, sensors: list[str]) -> "ObservationMask":
        idx = [self.sensors.index(s) for s in sensors]
        return ObservationMask(list(sensors), self.delivered[:, idx])

    def sensor_availability(self) -> np.ndarray:
        """Fraction of delivered steps per sensor."""
        return self.delivered.mean(axis=0)

    def time_availability(self) -> np.ndarray:
        """Fraction of delivered sensors per step."""
        return self.delivered.mean(axis=1)


def _read_table(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if not header or header[0] != "timestamp":
            raise ValueError(f"{path}: first column must be 'timestamp'")
        rows = [row for row in reader if row]
    sensors = [h.strip() for h in header[1:]]
    stamps = [row[0] for row in rows]
    try:
        # blank cells are missing readings
        values = np.array([[float(x) if x.strip() else np.nan for x in row[1:]] for row in rows],
                          dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from None
    if values.size and values.shape[1] != len(sensors):
        raise ValueError(f"{path}: ragged rows")
    return sensors, stamps, values.reshape(len(rows), len(sensors))


def read_measurements(path: str | Path) -> MeasurementBlock:
    sensors, stamps, values = _read_table(path)
    return MeasurementBlock(sensors, values, stamps)


def write_measurements(path: str | Path, block: MeasurementBlock, fmt: str = "%.10g") -> None:
    stamps = block.timestamps or [str(t) for t in range(block.horizon)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", *block.sensors])
        for t, row in enumerate(block.values):
            w.writerow([stamps[t], *(fmt % v for v in row)])


def read_mask(path: str | Path) -> ObservationMask:
    sensors, _, values = _read_table(path)
    if not np.isin(values, (0.0, 1.0)).all():
        raise ValueError(f"{path}: mask entries must be 0 or 1")
    return ObservationMask(sensors, values.astype(bool))


def write_mask(path: str | Path, mask: ObservationMask, timestamps: list[str] | None = None) -> None:
    stamps = timestamps or [str(t) for t in range(mask.delivered.shape[0])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", *mask.sensors])
        for t, row in enumerate(mask.delivered):
            w.writerow([stamps[t], *(int(v) for v in row)])

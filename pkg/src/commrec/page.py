"""Page-matrix layout: non-overlapping length-L segments as columns.

A cluster block of N_k sensors becomes an L x (N_k * W) matrix; sensor i
occupies columns i*W .. i*W + W - 1 and column i*W + w holds samples
w*L .. (w+1)*L - 1 of that sensor.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from commrec.measurements import MeasurementBlock, ObservationMask


@dataclass(frozen=True)
class PageLayout:
    L: int
    W: int
    sensors: tuple[str, ...]
    horizon: int

    @property
    def used(self) -> int:
        return self.L * self.W

    @property
    def remainder(self) -> int:
        return self.horizon - self.used

    @property
    def shape(self) -> tuple[int, int]:
        return self.L, len(self.sensors) * self.W

    def column(self, sensor_idx: int, window: int) -> int:
        return sensor_idx * self.W + window

    def column_map(self) -> list[tuple[str, int]]:
        return [(s, w) for s in self.sensors for w in range(self.W)]

    def cell(self, t: int, sensor_idx: int) -> tuple[int, int]:
        """Page cell holding sample t of the given sensor."""
        if not 0 <= t < self.used:
            raise IndexError(f"t={t} outside the used horizon {self.used}")
        return t % self.L, self.column(sensor_idx, t // self.L)


@dataclass
class PagePair:
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.mask.shape:
            raise ValueError("values and mask shapes differ")


def _check(L: int, W: int, T: int) -> None:
    if L < 2:
        raise ValueError("L must be at least 2")
    if W < 1:
        raise ValueError("W must be at least 1")
    if L * W > T:
        raise ValueError(f"L*W = {L * W} exceeds the horizon T = {T}")


def page_matrix(x: np.ndarray, L: int, W: int) -> np.ndarray:
    """T x N array -> L x (N*W) Page matrix (first L*W samples)."""
    T, N = x.shape
    _check(L, W, T)
    # (L*W, N) -> (W, L, N) -> (L, N, W) -> (L, N*W)
    return x[: L * W].reshape(W, L, N).transpose(1, 2, 0).reshape(L, N * W)


def unpage(p: np.ndarray, L: int, W: int) -> np.ndarray:
    """Inverse of :func:`page_matrix`: L x (N*W) -> (L*W) x N."""
    if p.shape[0] != L or p.shape[1] % W:
        raise ValueError(f"page shape {p.shape} incompatible with L={L}, W={W}")
    N = p.shape[1] // W
    return p.reshape(L, N, W).transpose(2, 0, 1).reshape(L * W, N)


def to_page(
    block: MeasurementBlock, mask: ObservationMask | None, L: int, W: int
) -> tuple[PagePair, PageLayout]:
    """Page form of a cluster block and its mask; trailing T - L*W samples are dropped."""
    _check(L, W, block.horizon)
    if mask is not None and list(mask.sensors) != list(block.sensors):
        raise ValueError("mask and block sensors differ")
    observed = (
        np.ones_like(block.values, dtype=bool) if mask is None else mask.delivered
    )
    values = page_matrix(block.values, L, W)
    pmask = page_matrix(observed, L, W)
    # missing cells carry NaN so any statistic that forgets the mask fails loudly
    values = np.where(pmask, values, np.nan)
    layout = PageLayout(L, W, tuple(block.sensors), block.horizon)
    return PagePair(values, pmask), layout


def from_page(recovered: np.ndarray, layout: PageLayout) -> MeasurementBlock:
    if recovered.shape != layout.shape:
        raise ValueError(f"shape {recovered.shape} does not match layout {layout.shape}")
    return MeasurementBlock(list(layout.sensors), unpage(recovered, layout.L, layout.W))


def block_slices(T: int, L: int, W: int) -> list[slice]:
    """Consecutive L*W-sample processing blocks tiling the horizon (remainder excluded)."""
    _check(L, W, T)
    n = T // (L * W)
    return [slice(b * L * W, (b + 1) * L * W) for b in range(n)]

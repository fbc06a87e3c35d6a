"""Optimal singular value thresholding (OSVT) for masked matrices.

The compiled kernel (``commrec._osvt_ext``) is used when it was built;
otherwise, or when ``COMMREC_PURE_PYTHON=1``, the NumPy kernel runs.
"""
from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from commrec import _osvt_py
from commrec.page import PagePair

log = logging.getLogger(__name__)

if os.environ.get("COMMREC_PURE_PYTHON") == "1":
    _kernel = _osvt_py
    BACKEND = "python"
else:
    try:
        from commrec import _osvt_ext as _kernel

        BACKEND = "cython"
    except ImportError:
        _kernel = _osvt_py
        BACKEND = "python"

MODES = ("iterative_masked", "paper_literal_single_pass")
SCALES = {"raw": 0, "median_scaled": 1}


def get_kernel(backend: str | None = None):
    """Kernel module for ``backend`` ('cython', 'python' or None for the active one)."""
    if backend is None:
        return _kernel
    if backend == "python":
        return _osvt_py
    if backend == "cython":
        from commrec import _osvt_ext

        return _osvt_ext
    raise ValueError(f"unknown backend {backend!r}")


@dataclass
class OsvtConfig:
    mode: str = "iterative_masked"
    max_iters: int = 500
    rel_tol: float = 1e-6
    min_rank_floor: int = 1
    threshold_scale: str = "raw"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.threshold_scale not in SCALES:
            raise ValueError(f"threshold_scale must be one of {tuple(SCALES)}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.min_rank_floor < 1:
            raise ValueError("min_rank_floor must be at least 1")


@dataclass
class RecoveryResult:
    reconstruction: np.ndarray
    rank: int
    iterations: int
    rel_change: float
    a: float
    b: float
    converged: bool = True
    constant: bool = False
    singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)


def optimal_threshold(m: int, n: int) -> float:
    """Hard threshold for singular values of an m x n matrix.

    Uses the aspect ratio min(m, n) / max(m, n), so the value does not depend
    on orientation. Square matrices give sqrt(16/3); the thin limit is sqrt(2).
    """
    if m < 1 or n < 1:
        raise ValueError("matrix dimensions must be positive")
    z = min(m, n) / max(m, n)
    return math.sqrt(2.0 * (z + 1.0) + 8.0 * z / ((z + 1.0) + math.sqrt(z * z + 14.0 * z + 1.0)))


def normalize(X: np.ndarray, mask: np.ndarray | None = None):
    """Scale observed cells of X into [-1, 1] using their min and max.

    Returns ``(Y, a, b)``. Missing cells of Y are set to 0, the midpoint of
    the observed range. A constant observed matrix (a == b) gives Y = 0.
    """
    X = np.asarray(X, dtype=float)
    observed = np.ones(X.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not observed.any():
        raise ValueError("no observed entries")
    vals = X[observed]
    a, b = float(vals.min()), float(vals.max())
    if b == a:
        return np.zeros_like(X), a, b
    Y = np.where(observed, (X - 0.5 * (a + b)) / (0.5 * (b - a)), 0.0)
    return Y, a, b


def rescale(Y: np.ndarray, a: float, b: float) -> np.ndarray:
    return 0.5 * (b - a) * Y + 0.5 * (a + b)


def osvt_single_pass(Y: np.ndarray, config: OsvtConfig | None = None,
                     threshold: float | None = None, backend: str | None = None):
    """Keep the singular triplets above the threshold; returns ``(Y_hat, rank)``.

    If none survives, the top ``min_rank_floor`` triplets are kept.
    """
    config = config or OsvtConfig()
    Y = np.ascontiguousarray(Y, dtype=float)
    if not np.isfinite(Y).all():
        raise np.linalg.LinAlgError("SVD input contains non-finite values")
    th = optimal_threshold(*Y.shape) if threshold is None else float(threshold)
    y_hat, k, _ = get_kernel(backend).threshold_pass(
        Y, th, SCALES[config.threshold_scale], config.min_rank_floor
    )
    return y_hat, k


def recover(pair, config: OsvtConfig | None = None, mask: np.ndarray | None = None,
            backend: str | None = None) -> RecoveryResult:
    """Fill the missing cells of a matrix by OSVT.

    ``pair`` is a :class:`PagePair` or a plain array with ``mask`` (True =
    observed). In iterative mode the observed cells are re-imposed after
    every pass until the missing block stops changing; the returned
    reconstruction keeps the observed values exactly.
    """
    config = config or OsvtConfig()
    if isinstance(pair, PagePair):
        X, observed = pair.values, pair.mask
    else:
        X = np.asarray(pair, dtype=float)
        observed = np.isfinite(X) if mask is None else np.asarray(mask, dtype=bool)
    if X.shape != observed.shape:
        raise ValueError("values and mask shapes differ")
    if not observed.any():
        raise ValueError("empty mask: no observed entries to recover from")
    if not np.isfinite(X[observed]).all():
        raise np.linalg.LinAlgError("observed entries must be finite")

    Y, a, b = normalize(X, observed)
    if a == b:
        return RecoveryResult(np.full(X.shape, a), rank=1, iterations=0, rel_change=0.0,
                              a=a, b=b, constant=True)

    kernel = get_kernel(backend)
    th = optimal_threshold(*X.shape)
    scale = SCALES[config.threshold_scale]
    floor = config.min_rank_floor

    if observed.all():
        _, k, s = kernel.threshold_pass(Y, th, scale, floor)
        return RecoveryResult(np.array(X, dtype=float), rank=k, iterations=0, rel_change=0.0,
                              a=a, b=b, singular_values=s)

    if config.mode == "paper_literal_single_pass":
        y_hat, k, s = kernel.threshold_pass(Y, th, scale, floor)
        recon = rescale(y_hat, a, b)
        return RecoveryResult(recon, rank=k, iterations=1, rel_change=float("nan"),
                              a=a, b=b, singular_values=s)

    Y, k, iters, change, s, residuals = kernel.masked_iterate(
        Y, observed, th, scale, config.max_iters, config.rel_tol, floor
    )
    converged = change < config.rel_tol
    if not converged:
        log.debug("OSVT stopped after %d iterations (relative change %.3g)", iters, change)
    recon = rescale(Y, a, b)
    recon[observed] = X[observed]
    return RecoveryResult(recon, rank=int(k), iterations=int(iters), rel_change=float(change),
                          a=a, b=b, converged=bool(converged), singular_values=s,
                          residuals=residuals)

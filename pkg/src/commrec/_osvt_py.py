"""Pure-NumPy OSVT kernels; the Cython module ``_osvt_ext`` mirrors this API.

Singular values come from the eigendecomposition of the smaller Gram
matrix, and the low-rank estimate is the projection of Y onto the retained
singular subspace; this equals sum(sigma_i u_i v_i^T) over the retained set.
"""
import numpy as np

# median singular value of a pure-noise matrix relative to its scale
MEDIAN_NOISE_RATIO = 0.85


def threshold_pass(Y, threshold, scale_mode, rank_floor):
    """One hard-thresholding pass. Returns (Y_hat, rank, singular values descending)."""
    m, n = Y.shape
    wide = m <= n
    gram = Y @ Y.T if wide else Y.T @ Y
    lam, vec = np.linalg.eigh(gram)
    lam = lam[::-1]
    vec = vec[:, ::-1]
    s = np.sqrt(np.clip(lam, 0.0, None))
    th = threshold
    if scale_mode == 1:
        th = threshold * np.median(s) / MEDIAN_NOISE_RATIO
    k = int(np.count_nonzero(s > th))
    k = max(k, min(rank_floor, s.size))
    basis = vec[:, :k]
    if wide:
        y_hat = basis @ (basis.T @ Y)
    else:
        y_hat = (Y @ basis) @ basis.T
    return y_hat, k, s


def masked_iterate(Y0, observed, threshold, scale_mode, max_iters, rel_tol, rank_floor):
    """Alternate thresholding with re-imposing the observed cells.

    Returns (Y, rank, iterations, last relative change of the missing block,
    singular values of the last pass, observed-cell residual per iteration).
    """
    Y = np.array(Y0, dtype=float, copy=True)
    miss = ~observed
    residuals = np.empty(max_iters)
    change = 0.0
    k = 0
    s = np.zeros(min(Y.shape))
    it = 0
    for it in range(1, max_iters + 1):
        y_hat, k, s = threshold_pass(Y, threshold, scale_mode, rank_floor)
        residuals[it - 1] = np.linalg.norm((y_hat - Y)[observed])
        old = Y[miss]
        new = y_hat[miss]
        denom = max(np.linalg.norm(old), np.linalg.norm(new))
        change = np.linalg.norm(new - old) / denom if denom > 0 else 0.0
        Y[miss] = new
        if change < rel_tol:
            break
    return Y, k, it, change, s, residuals[:it].copy()

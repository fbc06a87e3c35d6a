# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled OSVT kernels; same API and algorithm as ``commrec._osvt_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdlib cimport malloc, free
from scipy.linalg.cython_lapack cimport dsyev

cnp.import_array()

cdef double MEDIAN_NOISE_RATIO = 0.85


cdef struct Work:
    int m
    int n
    int p
    int lwork
    double* gram
    double* w
    double* work
    double* tmp


cdef int _alloc(Work* ws, int m, int n) except -1:
    cdef int p = m if m <= n else n
    cdef char jobz = b'V'
    cdef char uplo = b'U'
    cdef int info = 0
    cdef int query = -1
    cdef double opt = 0.0
    ws.m = m
    ws.n = n
    ws.p = p
    ws.gram = <double*> malloc(p * p * sizeof(double))
    ws.w = <double*> malloc(p * sizeof(double))
    ws.tmp = <double*> malloc(p * (m if m > n else n) * sizeof(double))
    ws.work = NULL
    if ws.gram == NULL or ws.w == NULL or ws.tmp == NULL:
        _free(ws)
        raise MemoryError()
    dsyev(&jobz, &uplo, &p, ws.gram, &p, ws.w, &opt, &query, &info)
    ws.lwork = <int> opt
    if ws.lwork < 3 * p:
        ws.lwork = 3 * p
    ws.work = <double*> malloc(ws.lwork * sizeof(double))
    if ws.work == NULL:
        _free(ws)
        raise MemoryError()
    return 0


cdef void _free(Work* ws) noexcept:
    free(ws.gram)
    free(ws.w)
    free(ws.work)
    free(ws.tmp)
    ws.gram = NULL
    ws.w = NULL
    ws.work = NULL
    ws.tmp = NULL


cdef int _pass(Work* ws, const double* Y, double threshold, int scale_mode,
               int rank_floor, double* out, double* s) noexcept nogil:
    """Hard-threshold Y into out; fills s (descending). Returns rank or -1."""
    cdef int m = ws.m, n = ws.n, p = ws.p
    cdef double* G = ws.gram
    cdef double* C = ws.tmp
    cdef double* bq
    cdef int i, j, c, r, q, k, info = 0
    cdef double acc, th, med, yi
    cdef char jobz = b'V'
    cdef char uplo = b'U'
    cdef bint wide = m <= n

    if wide:
        for i in range(p):
            for j in range(i, p):
                acc = 0.0
                for c in range(n):
                    acc = acc + Y[i * n + c] * Y[j * n + c]
                G[i * p + j] = acc
                G[j * p + i] = acc
    else:
        for i in range(p * p):
            G[i] = 0.0
        for r in range(m):
            for i in range(p):
                yi = Y[r * n + i]
                for j in range(i, p):
                    G[i * p + j] += yi * Y[r * n + j]
        for i in range(p):
            for j in range(i + 1, p):
                G[j * p + i] = G[i * p + j]

    dsyev(&jobz, &uplo, &p, G, &p, ws.w, ws.work, &ws.lwork, &info)
    if info != 0:
        return -1

    # eigenvalues ascend; the eigenvector for s[j] is column p-1-j (contiguous)
    for j in range(p):
        acc = ws.w[p - 1 - j]
        s[j] = sqrt(acc) if acc > 0.0 else 0.0

    th = threshold
    if scale_mode == 1:
        if p % 2 == 1:
            med = s[p // 2]
        else:
            med = 0.5 * (s[p // 2 - 1] + s[p // 2])
        th = threshold * med / MEDIAN_NOISE_RATIO
    k = 0
    while k < p and s[k] > th:
        k += 1
    if k < rank_floor:
        k = rank_floor if rank_floor < p else p

    if wide:
        for q in range(k):
            bq = G + (p - 1 - q) * p
            for c in range(n):
                acc = 0.0
                for i in range(m):
                    acc = acc + bq[i] * Y[i * n + c]
                C[q * n + c] = acc
        for i in range(m):
            for c in range(n):
                acc = 0.0
                for q in range(k):
                    acc = acc + G[(p - 1 - q) * p + i] * C[q * n + c]
                out[i * n + c] = acc
    else:
        for r in range(m):
            for q in range(k):
                bq = G + (p - 1 - q) * p
                acc = 0.0
                for j in range(n):
                    acc = acc + Y[r * n + j] * bq[j]
                C[r * k + q] = acc
        for r in range(m):
            for j in range(n):
                acc = 0.0
                for q in range(k):
                    acc = acc + C[r * k + q] * G[(p - 1 - q) * p + j]
                out[r * n + j] = acc
    return k


def threshold_pass(Y, double threshold, int scale_mode, int rank_floor):
    cdef double[:, ::1] y = np.ascontiguousarray(Y, dtype=np.float64)
    cdef int m = y.shape[0], n = y.shape[1]
    cdef Work ws
    out = np.empty((m, n), dtype=np.float64)
    s = np.empty(m if m <= n else n, dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double[::1] sv = s
    cdef int k
    _alloc(&ws, m, n)
    try:
        with nogil:
            k = _pass(&ws, &y[0, 0], threshold, scale_mode, rank_floor, &o[0, 0], &sv[0])
    finally:
        _free(&ws)
    if k < 0:
        raise np.linalg.LinAlgError("eigendecomposition did not converge")
    return out, k, s


def masked_iterate(Y0, observed, double threshold, int scale_mode, int max_iters,
                   double rel_tol, int rank_floor):
    Y = np.array(Y0, dtype=np.float64, order="C", copy=True)
    obs_arr = np.ascontiguousarray(observed, dtype=np.uint8)
    cdef double[:, ::1] y = Y
    cdef const unsigned char[:, ::1] obs = obs_arr
    cdef int m = y.shape[0], n = y.shape[1]
    cdef int p = m if m <= n else n
    yhat_arr = np.empty((m, n), dtype=np.float64)
    s = np.zeros(p, dtype=np.float64)
    residuals = np.empty(max_iters, dtype=np.float64)
    cdef double[:, ::1] yhat = yhat_arr
    cdef double[::1] sv = s
    cdef double[::1] res = residuals
    cdef Work ws
    cdef int it = 0, k = 0, i, j
    cdef double num, dold, dnew, d, change = 0.0, denom, rsum

    _alloc(&ws, m, n)
    try:
        with nogil:
            while it < max_iters:
                it += 1
                k = _pass(&ws, &y[0, 0], threshold, scale_mode, rank_floor, &yhat[0, 0], &sv[0])
                if k < 0:
                    break
                num = 0.0
                dold = 0.0
                dnew = 0.0
                rsum = 0.0
                for i in range(m):
                    for j in range(n):
                        if obs[i, j]:
                            d = yhat[i, j] - y[i, j]
                            rsum = rsum + d * d
                        else:
                            d = yhat[i, j] - y[i, j]
                            num = num + d * d
                            dold = dold + y[i, j] * y[i, j]
                            dnew = dnew + yhat[i, j] * yhat[i, j]
                            y[i, j] = yhat[i, j]
                res[it - 1] = sqrt(rsum)
                denom = sqrt(dold if dold > dnew else dnew)
                change = sqrt(num) / denom if denom > 0.0 else 0.0
                if change < rel_tol:
                    break
    finally:
        _free(&ws)
    if k < 0:
        raise np.linalg.LinAlgError("eigendecomposition did not converge")
    return Y, k, it, change, s, residuals[:it].copy()

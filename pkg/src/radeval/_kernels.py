"""Hot numeric kernels: numba-compiled inner loops with vectorized numpy fallbacks.

The JIT path is used when numba imports cleanly and ``RADEVAL_DISABLE_NUMBA``
is unset; ``BACKEND`` records the choice made at import time. Every kernel has
a ``*_numpy`` twin with identical semantics; the test suite compares the two
and ``benchmarks/bench_kernels.py`` times them against each other.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.sparse as sp

_DISABLE = os.environ.get("RADEVAL_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

BACKEND = "numba" if (HAVE_NUMBA and not _DISABLE) else "numpy"

_CHUNK = 512  # row block size for the vectorized fallbacks


# ---------------------------------------------------------------------------
# nearest centroid (K-Means assignment step)
# ---------------------------------------------------------------------------

def nearest_centroids_numpy(x: np.ndarray, centroids: np.ndarray):
    """Per row: index of the nearest centroid and the squared distance to it."""
    n = x.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dists = np.empty(n, dtype=np.float64)
    for start in range(0, n, _CHUNK):
        block = x[start:start + _CHUNK]
        d2 = ((block[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels[start:start + _CHUNK] = np.argmin(d2, axis=1)
        dists[start:start + _CHUNK] = np.min(d2, axis=1)
    return labels, dists


if HAVE_NUMBA:

    @njit(cache=True)
    def _nearest_centroids_jit(x, centroids):
        n, d = x.shape
        k = centroids.shape[0]
        labels = np.empty(n, dtype=np.int64)
        dists = np.empty(n, dtype=np.float64)
        for i in range(n):
            best = np.inf
            best_j = 0
            for j in range(k):
                s = 0.0
                for t in range(d):
                    diff = x[i, t] - centroids[j, t]
                    s += diff * diff
                if s < best:
                    best = s
                    best_j = j
            labels[i] = best_j
            dists[i] = best
        return labels, dists


def nearest_centroids(x: np.ndarray, centroids: np.ndarray):
    x = np.ascontiguousarray(x, dtype=np.float64)
    centroids = np.ascontiguousarray(centroids, dtype=np.float64)
    if BACKEND == "numba":
        return _nearest_centroids_jit(x, centroids)
    return nearest_centroids_numpy(x, centroids)


# ---------------------------------------------------------------------------
# per-point sums of euclidean distances into each cluster (silhouette)
# ---------------------------------------------------------------------------

def cluster_distance_sums_numpy(x: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    n = x.shape[0]
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    sums = np.zeros((n, k))
    for start in range(0, n, _CHUNK):
        block = x[start:start + _CHUNK]
        d2 = ((block[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
        np.maximum(d2, 0.0, out=d2)
        sums[start:start + _CHUNK] = np.sqrt(d2) @ onehot
    return sums


if HAVE_NUMBA:

    @njit(cache=True)
    def _cluster_distance_sums_jit(x, labels, k):
        n, d = x.shape
        sums = np.zeros((n, k))
        for i in range(n):
            for j in range(i + 1, n):
                s = 0.0
                for t in range(d):
                    diff = x[i, t] - x[j, t]
                    s += diff * diff
                dist = np.sqrt(s)
                sums[i, labels[j]] += dist
                sums[j, labels[i]] += dist
        return sums


def cluster_distance_sums(x: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    if BACKEND == "numba":
        return _cluster_distance_sums_jit(x, labels, k)
    return cluster_distance_sums_numpy(x, labels, k)


# ---------------------------------------------------------------------------
# concordant/discordant pair counts (Kendall tau-b)
# ---------------------------------------------------------------------------

def kendall_pair_counts_numpy(x: np.ndarray, y: np.ndarray):
    n = x.shape[0]
    concordant = 0
    discordant = 0
    for start in range(0, n, _CHUNK):
        rows = np.arange(start, min(start + _CHUNK, n))
        dx = np.sign(x[rows, None] - x[None, :])
        dy = np.sign(y[rows, None] - y[None, :])
        upper = rows[:, None] < np.arange(n)[None, :]
        prod = dx * dy
        concordant += int(np.count_nonzero((prod > 0) & upper))
        discordant += int(np.count_nonzero((prod < 0) & upper))
    return concordant, discordant


if HAVE_NUMBA:

    @njit(cache=True)
    def _kendall_pair_counts_jit(x, y):
        n = x.shape[0]
        concordant = 0
        discordant = 0
        for i in range(n):
            for j in range(i + 1, n):
                dx = x[i] - x[j]
                dy = y[i] - y[j]
                if dx != 0.0 and dy != 0.0:
                    if (dx > 0.0) == (dy > 0.0):
                        concordant += 1
                    else:
                        discordant += 1
        return concordant, discordant


def kendall_pair_counts(x: np.ndarray, y: np.ndarray):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if BACKEND == "numba":
        return _kendall_pair_counts_jit(x, y)
    return kendall_pair_counts_numpy(x, y)


# ---------------------------------------------------------------------------
# pairwise clipped match counts over CSR-packed token/entity multisets
# ---------------------------------------------------------------------------
# Reports are packed as one CSR family per feature kind (unigram counts,
# bigram counts, entity ids, relation ids); ids are sorted within a row. For
# an ordered pair (src, dst) the match count is sum(min(count_src, count_dst))
# over shared ids, which is the clipped n-gram match for counts and the
# intersection size for 0/1 sets.

def pair_match_counts_numpy(ids, cnts, indptr, src, dst) -> np.ndarray:
    n_rows = indptr.shape[0] - 1
    n_cols = int(ids.max()) + 1 if ids.size else 1
    mat = sp.csr_matrix(
        (cnts, ids, indptr), shape=(n_rows, n_cols), dtype=np.float64
    )
    row_tot = np.asarray(mat.sum(axis=1)).ravel()
    out = np.empty(src.shape[0], dtype=np.float64)
    for start in range(0, src.shape[0], 4 * _CHUNK):
        s = src[start:start + 4 * _CHUNK]
        t = dst[start:start + 4 * _CHUNK]
        diff = mat[s] - mat[t]
        l1 = np.asarray(np.abs(diff).sum(axis=1)).ravel()
        # sum(min(a, b)) == (sum(a) + sum(b) - sum(|a - b|)) / 2
        out[start:start + 4 * _CHUNK] = (row_tot[s] + row_tot[t] - l1) / 2.0
    return out


if HAVE_NUMBA:

    @njit(cache=True)
    def _pair_match_counts_jit(ids, cnts, indptr, src, dst):
        m = src.shape[0]
        out = np.empty(m, dtype=np.float64)
        for p in range(m):
            ia = indptr[src[p]]
            ea = indptr[src[p] + 1]
            ib = indptr[dst[p]]
            eb = indptr[dst[p] + 1]
            total = 0.0
            while ia < ea and ib < eb:
                va = ids[ia]
                vb = ids[ib]
                if va == vb:
                    ca = cnts[ia]
                    cb = cnts[ib]
                    total += ca if ca < cb else cb
                    ia += 1
                    ib += 1
                elif va < vb:
                    ia += 1
                else:
                    ib += 1
            out[p] = total
        return out


def pair_match_counts(ids, cnts, indptr, src, dst) -> np.ndarray:
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    cnts = np.ascontiguousarray(cnts, dtype=np.float64)
    indptr = np.ascontiguousarray(indptr, dtype=np.int64)
    src = np.ascontiguousarray(src, dtype=np.int64)
    dst = np.ascontiguousarray(dst, dtype=np.int64)
    if BACKEND == "numba":
        return _pair_match_counts_jit(ids, cnts, indptr, src, dst)
    return pair_match_counts_numpy(ids, cnts, indptr, src, dst)

"""MeSH vectorization, K-Means, cluster quality scores, and 2-D projection."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .corpus import Report


@dataclass(frozen=True)
class MeshVectorMatrix:
    """Term-weight matrix over MeSH tokens; row order matches the collection."""

    values: np.ndarray
    vocab: tuple[str, ...]
    report_ids: tuple[str, ...]

    @property
    def n_reports(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ClusterAssignment:
    k: int
    labels: np.ndarray
    centroids: np.ndarray
    seed: int
    inertia: float
    inertia_history: tuple[float, ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class ClusterQuality:
    """Quality scores for one assignment; None marks undefined (k=1)."""

    calinski_harabasz: float | None
    silhouette: float | None
    inertia: float


def mesh_tokens(label: str) -> list[str]:
    """Tokens for one label: the whole label plus its "/"-split qualifiers."""
    label = label.strip().lower()
    if not label:
        return []
    parts = [p.strip() for p in label.split("/") if p.strip()]
    if len(parts) <= 1:
        return [label]
    return [label] + parts


def vectorize_mesh(reports: list[Report], idf: bool = True) -> MeshVectorMatrix:
    """Count matrix over whole-label and qualifier tokens, optionally IDF-scaled.

    IDF uses ln(n/df) + 1 so no vocabulary column is scaled to zero.
    """
    if not reports:
        raise ValueError("cannot vectorize an empty report collection")

    token_lists = [
        [tok for label in r.mesh_labels for tok in mesh_tokens(label)]
        for r in reports
    ]
    vocab = sorted({tok for toks in token_lists for tok in toks})
    if not vocab:
        raise ValueError("no MeSH tokens present in the collection")
    index = {tok: i for i, tok in enumerate(vocab)}

    values = np.zeros((len(reports), len(vocab)))
    for row, toks in enumerate(token_lists):
        for tok in toks:
            values[row, index[tok]] += 1.0

    if idf:
        df = np.count_nonzero(values, axis=0)
        values = values * (np.log(len(reports) / df) + 1.0)

    return MeshVectorMatrix(
        values=values,
        vocab=tuple(vocab),
        report_ids=tuple(r.id for r in reports),
    )


def _count_distinct_rows(x: np.ndarray) -> int:
    return np.unique(x, axis=0).shape[0]


def _farthest_point_seeds(x: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Greedy farthest-point seeding; first point drawn from the given seed."""
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(x.shape[0]))]
    min_d2 = ((x - x[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(min_d2))
        chosen.append(nxt)
        min_d2 = np.minimum(min_d2, ((x - x[nxt]) ** 2).sum(axis=1))
    return x[chosen].copy()


def kmeans(
    matrix: MeshVectorMatrix | np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 300,
) -> ClusterAssignment:
    """Lloyd iterations from farthest-point seeds; deterministic given seed.

    Empty clusters are reseeded to the point farthest from its centroid, so
    every cluster id in [0, k) ends up used.
    """
    x = matrix.values if isinstance(matrix, MeshVectorMatrix) else np.asarray(matrix, dtype=float)
    if k < 1:
        raise ValueError("k must be positive")
    distinct = _count_distinct_rows(x)
    if k > distinct:
        raise ValueError(f"k={k} exceeds the {distinct} distinct rows")

    centroids = _farthest_point_seeds(x, k, seed)
    labels = np.full(x.shape[0], -1, dtype=np.int64)
    history: list[float] = []
    for _ in range(max_iter):
        new_labels, dists = _kernels.nearest_centroids(x, centroids)
        counts = np.bincount(new_labels, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            far = int(np.argmax(dists))
            new_labels[far] = empty
            dists[far] = 0.0
            counts = np.bincount(new_labels, minlength=k)
        history.append(float(dists.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        sums = np.zeros((k, x.shape[1]))
        np.add.at(sums, labels, x)
        centroids = sums / counts[:, None]

    # final consistency pass: inertia against the final centroids
    labels, dists = _kernels.nearest_centroids(x, centroids)
    counts = np.bincount(labels, minlength=k)
    for empty in np.flatnonzero(counts == 0):
        far = int(np.argmax(dists))
        labels[far] = empty
        dists[far] = 0.0
        counts = np.bincount(labels, minlength=k)
    history.append(float(dists.sum()))

    return ClusterAssignment(
        k=k,
        labels=labels,
        centroids=centroids,
        seed=seed,
        inertia=history[-1],
        inertia_history=tuple(history),
    )


def cluster_quality(
    matrix: MeshVectorMatrix | np.ndarray,
    assignment: ClusterAssignment,
) -> ClusterQuality:
    """Calinski-Harabasz, silhouette (singletons contribute 0), and inertia."""
    x = matrix.values if isinstance(matrix, MeshVectorMatrix) else np.asarray(matrix, dtype=float)
    labels = assignment.labels
    k = assignment.k
    n = x.shape[0]
    counts = np.bincount(labels, minlength=k)

    centroids = np.zeros((k, x.shape[1]))
    np.add.at(centroids, labels, x)
    centroids /= np.maximum(counts, 1)[:, None]
    inertia = float(((x - centroids[labels]) ** 2).sum())

    if k == 1:
        return ClusterQuality(calinski_harabasz=None, silhouette=None, inertia=inertia)

    overall = x.mean(axis=0)
    between = float((counts * ((centroids - overall) ** 2).sum(axis=1)).sum())
    within = inertia
    if within == 0.0:
        ch = math.inf if between > 0 else 0.0
    else:
        ch = (between / (k - 1)) / (within / (n - k))

    sums = _kernels.cluster_distance_sums(x, labels, k)
    sil_values = np.zeros(n)
    for i in range(n):
        own = labels[i]
        if counts[own] <= 1:
            continue  # singleton convention: contributes 0
        a = sums[i, own] / (counts[own] - 1)
        other = [sums[i, c] / counts[c] for c in range(k) if c != own and counts[c] > 0]
        b = min(other)
        denom = max(a, b)
        sil_values[i] = (b - a) / denom if denom > 0 else 0.0
    silhouette = float(sil_values.mean())

    return ClusterQuality(calinski_harabasz=float(ch), silhouette=silhouette, inertia=inertia)


def select_k(
    matrix: MeshVectorMatrix | np.ndarray,
    k_range: tuple[int, int],
    seed: int,
    max_iter: int = 300,
) -> tuple[int, dict[int, ClusterQuality]]:
    """Argmax of Calinski-Harabasz over the inclusive k range, plus the full table."""
    x = matrix.values if isinstance(matrix, MeshVectorMatrix) else np.asarray(matrix, dtype=float)
    lo, hi = k_range
    if lo > hi:
        raise ValueError(f"empty k range: {k_range}")
    distinct = _count_distinct_rows(x)
    if lo < 2 or hi > distinct:
        raise ValueError(f"k range {k_range} outside [2, {distinct}]")

    table: dict[int, ClusterQuality] = {}
    best_k, best_ch = lo, -math.inf
    for k in range(lo, hi + 1):
        quality = cluster_quality(x, kmeans(x, k, seed, max_iter=max_iter))
        table[k] = quality
        if quality.calinski_harabasz is not None and quality.calinski_harabasz > best_ch:
            best_k, best_ch = k, quality.calinski_harabasz
    return best_k, table


def pca_project(matrix: MeshVectorMatrix | np.ndarray, dims: int = 2) -> np.ndarray:
    """Mean-centered principal-component scores, components ordered by variance.

    Component signs are fixed so the largest-magnitude loading is positive.
    """
    x = matrix.values if isinstance(matrix, MeshVectorMatrix) else np.asarray(matrix, dtype=float)
    n = x.shape[0]
    if n < dims:
        raise ValueError(f"need at least {dims} rows, got {n}")

    centered = x - x.mean(axis=0)
    if not centered.any():
        warnings.warn("all rows identical; projection is all zeros")
        return np.zeros((n, dims))

    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:dims]
    flip = np.sign(components[np.arange(components.shape[0]), np.abs(components).argmax(axis=1)])
    flip[flip == 0] = 1.0
    components = components * flip[:, None]
    scores = centered @ components.T
    if components.shape[0] < dims:  # fewer features than requested dims
        scores = np.pad(scores, ((0, 0), (0, dims - components.shape[0])))
    return scores

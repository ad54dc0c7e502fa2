"""Deterministic k-means and Ward agglomerative clustering, plus the
two-stage grouping of swallow features.

Both algorithms avoid hidden randomness: k-means seeds with a
farthest-point sweep from the data mean, Ward resolves cost ties toward
the lexicographically smallest cluster-id pair. The two-stage procedure
keeps clusters holding at least 15% of the swallows as main clusters and
re-clusters everything else into special clusters.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDataError, InvalidParameterError
from .features import SwallowFeature
from .pca import N_COMPONENTS_DEFAULT, PcaModel, fit_pca, project

MAIN_CLUSTER_FRACTION = 0.15
STAGE2_K_DEFAULT = 10
K_MIN_DEFAULT = 4
K_MAX_DEFAULT = 10
MAX_KMEANS_ITER = 300


def _as_points(points: np.ndarray) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise InvalidDataError(f"expected a non-empty (n, d) matrix, got shape {x.shape}")
    return x


def _check_k(k: int, n: int) -> int:
    k = int(k)
    if k < 1 or k > n:
        raise InvalidParameterError(f"k must be in [1, {n}], got {k}")
    return k


def _seed_centroids(x: np.ndarray, k: int) -> np.ndarray:
    """First center nearest the data mean, then repeated farthest points.

    Ties resolve to the lowest point index throughout.
    """
    mean = x.mean(axis=0)
    first = int(np.argmin(((x - mean) ** 2).sum(axis=1)))
    chosen = [first]
    nearest = ((x - x[first]) ** 2).sum(axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, ((x - x[nxt]) ** 2).sum(axis=1))
    return x[chosen].copy()


def kmeans_cluster(
    points: np.ndarray,
    k: int,
    rng_seed: int | None = None,
    max_iter: int = MAX_KMEANS_ITER,
    return_objectives: bool = False,
):
    """Lloyd's algorithm with deterministic seeding.

    Returns (assignments, centroids), plus the per-iteration sum of
    squared distances when return_objectives is set. Assignment ties go
    to the lowest cluster index; an empty cluster is repaired by moving
    the point currently farthest from its centroid. rng_seed is accepted
    for interface stability but unused: seeding is deterministic.
    """
    del rng_seed
    x = _as_points(points)
    n = x.shape[0]
    k = _check_k(k, n)
    centroids = _seed_centroids(x, k)
    assign = np.full(n, -1, dtype=np.int64)
    objectives: list[float] = []
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(d2, axis=1)
        for empty in range(k):
            if not np.any(new_assign == empty):
                dist_own = d2[np.arange(n), new_assign]
                far = int(np.argmax(dist_own))
                centroids[empty] = x[far]
                d2[:, empty] = ((x - x[far]) ** 2).sum(axis=1)
                new_assign = np.argmin(d2, axis=1)
        objectives.append(float(d2[np.arange(n), new_assign].sum()))
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(k):
            chosen = assign == c
            if chosen.any():  # a cluster can stay empty on degenerate data
                centroids[c] = x[chosen].mean(axis=0)
    if return_objectives:
        return assign, centroids, objectives
    return assign, centroids


def _ward_cost_matrix(x: np.ndarray) -> np.ndarray:
    sq = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
    return 0.5 * sq


def agglomerative_cluster(points: np.ndarray, k: int) -> np.ndarray:
    """Bottom-up Ward clustering down to k clusters.

    Merge costs follow the standard recurrence; at every step the
    cheapest pair merges, with exact ties broken toward the
    lexicographically smallest pair of cluster ids (a cluster's id is its
    smallest member index). Labels are numbered by ascending cluster id.
    """
    x = _as_points(points)
    n = x.shape[0]
    k = _check_k(k, n)
    cost = _ward_cost_matrix(x)
    inf = np.inf
    cost[np.tril_indices(n)] = inf
    sizes = np.ones(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    members: list[list[int]] = [[i] for i in range(n)]
    for _ in range(n - k):
        flat = int(np.argmin(cost))
        a, b = divmod(flat, n)
        sa, sb = sizes[a], sizes[b]
        ab = cost[a, b]
        for c in np.flatnonzero(active):
            if c == a or c == b:
                continue
            sc = sizes[c]
            ca = cost[min(a, c), max(a, c)]
            cb = cost[min(b, c), max(b, c)]
            merged = ((sa + sc) * ca + (sb + sc) * cb - sc * ab) / (sa + sb + sc)
            cost[min(a, c), max(a, c)] = merged
        sizes[a] += sizes[b]
        members[a].extend(members[b])
        active[b] = False
        cost[b, :] = inf
        cost[:, b] = inf
    labels = np.empty(n, dtype=np.int64)
    for new_id, root in enumerate(np.flatnonzero(active)):
        labels[members[root]] = new_id
    return labels


def cluster_centroids(points: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Member means per label (labels assumed 0..k-1, all non-empty)."""
    x = _as_points(points)
    k = int(labels.max()) + 1
    return np.stack([x[labels == c].mean(axis=0) for c in range(k)])


def mean_centroid_distance(points: np.ndarray, labels: np.ndarray) -> float:
    """Mean euclidean distance of each point to its cluster centroid."""
    x = _as_points(points)
    dist = np.empty(x.shape[0])
    for c in np.unique(labels):
        chosen = labels == c
        dist[chosen] = np.linalg.norm(x[chosen] - x[chosen].mean(axis=0), axis=1)
    return float(dist.mean())


def _run_method(points: np.ndarray, k: int, method: str) -> np.ndarray:
    if method == "kmeans":
        assign, _ = kmeans_cluster(points, k)
        return assign
    if method == "agglomerative":
        return agglomerative_cluster(points, k)
    raise InvalidParameterError(f"unknown clustering method {method!r}")


def select_cluster_count(
    points: np.ndarray,
    k_min: int = K_MIN_DEFAULT,
    k_max: int = K_MAX_DEFAULT,
    method: str = "agglomerative",
) -> tuple[int, dict[int, float]]:
    """Scan k in [k_min, k_max], choose the lowest mean centroid distance.

    Ties resolve to the smallest k. A k_max above the point count is
    clamped with a warning.
    """
    x = _as_points(points)
    n = x.shape[0]
    if k_min < 1 or k_max < k_min:
        raise InvalidParameterError(f"need 1 <= k_min <= k_max, got [{k_min}, {k_max}]")
    if k_max > n:
        warnings.warn(f"k_max={k_max} clamped to point count {n}", stacklevel=2)
        k_max = n
        k_min = min(k_min, k_max)
    scores: dict[int, float] = {}
    best_k, best = -1, math.inf
    for k in range(k_min, k_max + 1):
        labels = _run_method(x, k, method)
        score = mean_centroid_distance(x, labels)
        scores[k] = score
        if score < best:
            best_k, best = k, score
    return best_k, scores


@dataclass
class ClusteringResult:
    """Two-stage clustering output for a set of swallows.

    Assignments pair a stage ("main" or "special") with a cluster id;
    main ids refer to the stage-1 clustering, special ids to the stage-2
    re-clustering of the residual. Representatives give, per final
    cluster, the member closest to and farthest from its centroid.
    """

    method: str
    swallow_ids: list[tuple[str, int]]
    assignments: list[tuple[str, int]]
    reduced: np.ndarray
    pca: PcaModel
    chosen_k: int
    k_scores: dict[int, float]
    main_cluster_ids: list[int]
    stage2_k: int
    centroids: dict[tuple[str, int], np.ndarray] = field(default_factory=dict)
    distances: np.ndarray = field(default_factory=lambda: np.zeros(0))
    representatives: dict[tuple[str, int], tuple[tuple[str, int], tuple[str, int]]] = field(
        default_factory=dict
    )

    def members(self, cluster: tuple[str, int]) -> list[int]:
        """Indices of the swallows assigned to one final cluster."""
        return [i for i, a in enumerate(self.assignments) if a == cluster]


def two_stage_clustering(
    features: list[SwallowFeature],
    method: str = "agglomerative",
    n_components: int = N_COMPONENTS_DEFAULT,
    k_min: int = K_MIN_DEFAULT,
    k_max: int = K_MAX_DEFAULT,
    stage2_k: int = STAGE2_K_DEFAULT,
) -> ClusteringResult:
    """PCA-reduce swallow features, cluster, and split main from special.

    Stage 1 picks k in [k_min, k_max] by lowest mean centroid distance
    and keeps clusters holding at least ceil(0.15 * n) swallows as main
    clusters. All remaining swallows are re-clustered in stage 2 with
    k = min(stage2_k, residual size). Each feature's ``reduced`` field is
    filled with its PCA projection as a side effect.
    """
    if len(features) < 2:
        raise InvalidDataError(f"need at least 2 swallows to cluster, got {len(features)}")
    vectors = np.stack([f.vector for f in features])
    pca = fit_pca(vectors, n_components)
    reduced = project(pca, vectors)
    for feat, row in zip(features, reduced):
        feat.reduced = row

    n = len(features)
    chosen_k, k_scores = select_cluster_count(reduced, k_min, k_max, method)
    labels1 = _run_method(reduced, chosen_k, method)
    sizes = np.bincount(labels1, minlength=chosen_k)
    min_main = math.ceil(MAIN_CLUSTER_FRACTION * n)
    main_ids = [c for c in range(chosen_k) if sizes[c] >= min_main]

    assignments: list[tuple[str, int] | None] = [None] * n
    for i, lab in enumerate(labels1):
        if lab in main_ids:
            assignments[i] = ("main", int(lab))
    residual = [i for i in range(n) if assignments[i] is None]
    if residual:
        k2 = min(stage2_k, len(residual))
        labels2 = _run_method(reduced[residual], k2, method)
        for pos, i in enumerate(residual):
            assignments[i] = ("special", int(labels2[pos]))
    else:
        k2 = 0

    result = ClusteringResult(
        method=method,
        swallow_ids=[f.swallow_id for f in features],
        assignments=assignments,  # type: ignore[arg-type]
        reduced=reduced,
        pca=pca,
        chosen_k=int(chosen_k),
        k_scores=k_scores,
        main_cluster_ids=[int(c) for c in main_ids],
        stage2_k=int(k2),
    )
    distances = np.zeros(n)
    for cluster in sorted(set(result.assignments)):
        idx = result.members(cluster)
        centroid = reduced[idx].mean(axis=0)
        result.centroids[cluster] = centroid
        dist = np.linalg.norm(reduced[idx] - centroid, axis=1)
        distances[idx] = dist
        closest = features[idx[int(np.argmin(dist))]].swallow_id
        farthest = features[idx[int(np.argmax(dist))]].swallow_id
        result.representatives[cluster] = (closest, farthest)
    result.distances = distances
    return result

"""K-means with k-means++ seeding, and the alternating k-medoids variant.

Squared Euclidean distance throughout; inputs are standardized features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist


@dataclass(frozen=True)
class ClusteringResult:
    centers: np.ndarray  # (k, d); for k-medoids these are the medoid rows
    assignments: np.ndarray  # (m,) cluster ids
    inertia: float  # sum of squared distances to assigned centers
    medoid_indices: np.ndarray | None = None  # (k,) rows of X, k-medoids only
    inertia_path: tuple[float, ...] = ()  # per-iteration objective, diagnostic


def _sq_dists(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return cdist(X, centers, metric="sqeuclidean")


def kmeanspp_indices(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """D^2-weighted seeding; returns k distinct row indices of X."""
    m = len(X)
    if k > m:
        raise ValueError(f"k={k} exceeds m={m}")
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integers(m)
    d2 = np.sum((X - X[chosen[0]]) ** 2, axis=1)
    taken = np.zeros(m, dtype=bool)
    taken[chosen[0]] = True
    for j in range(1, k):
        weights = np.where(taken, 0.0, d2)
        total = weights.sum()
        if total > 0:
            nxt = rng.choice(m, p=weights / total)
        else:
            # all remaining points coincide with a chosen center
            nxt = rng.choice(np.flatnonzero(~taken))
        chosen[j] = nxt
        taken[nxt] = True
        d2 = np.minimum(d2, np.sum((X - X[nxt]) ** 2, axis=1))
    return chosen


def kmeanspp_seed(X: np.ndarray, k: int, seed: int) -> np.ndarray:
    """k-means++ seed points (k x d matrix of data rows)."""
    rng = np.random.default_rng(seed)
    return X[kmeanspp_indices(np.asarray(X, dtype=np.float64), k, rng)].copy()


def _repair_empty(dist_to_own: np.ndarray, assign: np.ndarray, k: int) -> np.ndarray:
    """Give each empty cluster the farthest point of a multi-member cluster.

    Only multi-member clusters may be raided, otherwise duplicate-heavy data
    can re-empty a cluster that was just repaired.
    """
    sizes = np.bincount(assign, minlength=k)
    for cid in range(k):
        if sizes[cid] > 0:
            continue
        for far in np.argsort(-dist_to_own, kind="stable"):
            if sizes[assign[far]] > 1:
                sizes[assign[far]] -= 1
                assign[far] = cid
                sizes[cid] = 1
                dist_to_own[far] = 0.0
                break
    return assign


def kmeans(X: np.ndarray, k: int, seed: int, max_iters: int = 100) -> ClusteringResult:
    """Lloyd iterations from a k-means++ seed until assignments stabilize."""
    X = np.asarray(X, dtype=np.float64)
    m = len(X)
    if k > m:
        raise ValueError(f"k={k} exceeds m={m}")
    centers = kmeanspp_seed(X, k, seed)
    assign = np.full(m, -1, dtype=np.int64)
    path = []
    for _ in range(max_iters):
        dists = _sq_dists(X, centers)
        new_assign = dists.argmin(axis=1)
        own = dists[np.arange(m), new_assign]  # copy; repair zeroes moved points
        new_assign = _repair_empty(own, new_assign, k)
        path.append(float(own.sum()))
        if (new_assign == assign).all():
            break
        assign = new_assign
        for cid in range(k):
            centers[cid] = X[assign == cid].mean(axis=0)
    inertia = float(np.sum((X - centers[assign]) ** 2))
    return ClusteringResult(centers, assign, inertia, None, tuple(path))


def kmedoids(X: np.ndarray, k: int, seed: int, max_iters: int = 100) -> ClusteringResult:
    """Alternating (Voronoi-iteration) k-medoids from a k-means++ seed.

    Each update step replaces a medoid with the cluster member minimizing the
    total within-cluster squared distance; the total cost never increases.
    """
    X = np.asarray(X, dtype=np.float64)
    m = len(X)
    if k > m:
        raise ValueError(f"k={k} exceeds m={m}")
    rng = np.random.default_rng(seed)
    medoids = kmeanspp_indices(X, k, rng)
    path = []
    for _ in range(max_iters):
        dists = _sq_dists(X, X[medoids])
        assign = dists.argmin(axis=1)
        assign[medoids] = np.arange(k)  # keeps every cluster non-empty
        path.append(float(dists[np.arange(m), assign].sum()))
        new_medoids = medoids.copy()
        for cid in range(k):
            members = np.flatnonzero(assign == cid)
            within = _sq_dists(X[members], X[members]).sum(axis=1)
            new_medoids[cid] = members[int(np.argmin(within))]
        if (new_medoids == medoids).all():
            break
        medoids = new_medoids
    dists = _sq_dists(X, X[medoids])
    assign = dists.argmin(axis=1)
    assign[medoids] = np.arange(k)
    cost = float(dists[np.arange(m), assign].sum())
    return ClusteringResult(X[medoids].copy(), assign, cost, medoids, tuple(path))


def nearest_to_centers(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """For each center, in order, the nearest not-yet-claimed row of X."""
    X = np.asarray(X, dtype=np.float64)
    k = len(centers)
    if k > len(X):
        raise ValueError(f"need at least {k} rows, got {len(X)}")
    dists = _sq_dists(X, np.asarray(centers, dtype=np.float64))
    out = np.empty(k, dtype=np.int64)
    claimed = np.zeros(len(X), dtype=bool)
    for j in range(k):
        col = np.where(claimed, np.inf, dists[:, j])
        out[j] = int(np.argmin(col))
        claimed[out[j]] = True
    return out

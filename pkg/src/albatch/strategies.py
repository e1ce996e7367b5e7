"""Batch sampling strategies and the representative/informative balancing schedule.

The balancing schedule splits each batch of b queries between density-guided
(representative) picks and entropy-guided, cluster-diversified (informative)
picks as a piecewise function of the iteration counter:

    t <  T1        -> (b, 0)
    T1 <= t < T2   -> (b - B, B)  with B = (t - T1 + ceil(b*c)) mod b
    t >= T2        -> (0, b)

c in [0, 1] is the annotator's confidence in the initial model; raising it
shifts the schedule toward informative sampling from the first iteration. The
piecewise form is implemented literally, including the modulus wrap inside the
middle branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classifier import CalibratedClassifier, predict_proba_batch
from .cluster import kmeans, kmedoids, nearest_to_centers
from .mixture import GmmFitConfig, child_seed, log_density, score_samples, select_k

PROVENANCE_TAGS = ("representative", "informative", "random", "max_entropy", "kmedoids")


@dataclass(frozen=True)
class BalancingParams:
    b: int
    c: float
    T1: int
    T2: int

    def __post_init__(self):
        if self.b < 1:
            raise ValueError("batch size b must be >= 1")
        if not 0.0 <= self.c <= 1.0:
            raise ValueError("confidence c must be in [0, 1]")
        if self.T1 < 0 or self.T2 <= self.T1:
            raise ValueError("need 0 <= T1 < T2")


@dataclass(frozen=True)
class BatchAllocation:
    n_repr: int
    n_info: int


@dataclass(frozen=True)
class QueryBatch:
    indices: tuple[int, ...]
    provenance: tuple[str, ...]
    scores: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.indices) == len(self.provenance) == len(self.scores)):
            raise ValueError("indices, provenance, scores must align")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("batch indices must be distinct")
        bad = set(self.provenance) - set(PROVENANCE_TAGS)
        if bad:
            raise ValueError(f"unknown provenance tags: {bad}")


def balance(t: int, p: BalancingParams) -> BatchAllocation:
    """Evaluate the balancing schedule at iteration t (t >= 1)."""
    if t < 1:
        raise ValueError("iterations are counted from 1")
    if t < p.T1:
        return BatchAllocation(p.b, 0)
    if t >= p.T2:
        return BatchAllocation(0, p.b)
    # round before ceil: b*c may land a hair above an integer in floats
    shift = math.ceil(round(p.b * p.c, 9))
    B = (t - p.T1 + shift) % p.b
    return BatchAllocation(p.b - B, B)


def entropy(probs) -> float:
    """Shannon entropy in nats of a probability vector; 0*ln(0) = 0."""
    p = np.asarray(probs, dtype=np.float64)
    if (p < 0).any() or abs(p.sum() - 1.0) > 1e-6:
        raise ValueError(f"not a probability vector: {probs}")
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def _entropy_rows(probs: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(probs > 0, probs * np.log(probs), 0.0)
    return -terms.sum(axis=1)


def _batch(indices, tag: str, scores) -> QueryBatch:
    idx = [int(i) for i in indices]
    return QueryBatch(tuple(idx), (tag,) * len(idx), tuple(float(s) for s in scores))


def _merge(a: QueryBatch, b: QueryBatch) -> QueryBatch:
    return QueryBatch(a.indices + b.indices, a.provenance + b.provenance, a.scores + b.scores)


def sample_random(U: np.ndarray, b: int, seed: int) -> QueryBatch:
    """min(b, |U|) indices uniformly without replacement."""
    U = np.asarray(U, dtype=np.int64)
    if len(U) == 0:
        raise ValueError("empty unlabeled pool")
    rng = np.random.default_rng(seed)
    picks = rng.choice(U, size=min(b, len(U)), replace=False)
    return _batch(picks, "random", np.zeros(len(picks)))


def sample_max_entropy(U: np.ndarray, clf: CalibratedClassifier, X: np.ndarray, b: int) -> QueryBatch:
    """The plain top-b-by-entropy baseline (no diversification)."""
    U = np.asarray(U, dtype=np.int64)
    if len(U) == 0:
        raise ValueError("empty unlabeled pool")
    H = _entropy_rows(predict_proba_batch(clf, X[U]))
    order = np.lexsort((U, -H))[: min(b, len(U))]  # ties -> lower index
    return _batch(U[order], "max_entropy", H[order])


def sample_kmedoids(U: np.ndarray, X: np.ndarray, b: int, seed: int) -> QueryBatch:
    """The unsupervised baseline: the batch is the pool's min(b, |U|) medoids."""
    U = np.asarray(U, dtype=np.int64)
    if len(U) == 0:
        raise ValueError("empty unlabeled pool")
    k = min(b, len(U))
    res = kmedoids(X[U], k, seed)
    costs = [float(np.sum((X[U][res.assignments == cid] - res.centers[cid]) ** 2))
             for cid in range(k)]
    return _batch(U[res.medoid_indices], "kmedoids", costs)


def sample_representative(U: np.ndarray, X: np.ndarray, n_repr: int,
                          cfg: GmmFitConfig, seed: int) -> QueryBatch:
    """Density-guided picks from a mixture fit of the current pool.

    Fits the BIC-selected mixture on the pool rows, then returns the instances
    nearest the n_repr component means of lowest mixture density; when the
    mixture has fewer components than n_repr, all component means are used and
    the remainder is filled with the unclaimed lowest-likelihood instances.
    Scores carry the instances' mixture log-densities.
    """
    U = np.asarray(U, dtype=np.int64)
    if not 1 <= n_repr <= len(U):
        raise ValueError(f"need 1 <= n_repr <= |U|, got n_repr={n_repr}, |U|={len(U)}")
    XU = X[U]
    model = select_k(XU, cfg, child_seed(seed, 11))
    pool_scores = score_samples(model, XU)

    mean_density = np.array([log_density(model, model.means[k]) for k in range(model.K)])
    n_means = min(model.K, n_repr)
    chosen = np.argsort(mean_density, kind="stable")[:n_means]
    local = list(nearest_to_centers(XU, model.means[chosen]))

    if n_means < n_repr:
        claimed = np.zeros(len(U), dtype=bool)
        claimed[local] = True
        rest = np.lexsort((U, pool_scores))  # lowest likelihood, ties -> lower index
        for i in rest:
            if len(local) == n_repr:
                break
            if not claimed[i]:
                local.append(int(i))
                claimed[i] = True
    return _batch(U[local], "representative", pool_scores[local])


def sample_informative(U: np.ndarray, X: np.ndarray, clf: CalibratedClassifier,
                       n_info: int, b: int, seed: int) -> QueryBatch:
    """Entropy-guided picks, diversified by k-means over the candidate set.

    The candidate set is the top n_info/b fraction of the pool by predictive
    entropy (at least n_info instances so clustering is feasible); k-means with
    k = n_info picks one instance nearest each centroid. Scores carry entropies.
    """
    U = np.asarray(U, dtype=np.int64)
    if not 1 <= n_info <= len(U):
        raise ValueError(f"need 1 <= n_info <= |U|, got n_info={n_info}, |U|={len(U)}")
    XU = X[U]
    H = _entropy_rows(predict_proba_batch(clf, XU))
    n_cand = min(len(U), max(n_info, -(-len(U) * n_info // b)))
    cand = np.lexsort((U, -H))[:n_cand]
    km = kmeans(XU[cand], n_info, child_seed(seed, 23))
    picks = cand[nearest_to_centers(XU[cand], km.centers)]
    return _batch(U[picks], "informative", H[picks])


def sample_adaptive(U: np.ndarray, X: np.ndarray, clf: CalibratedClassifier, t: int,
                    p: BalancingParams, cfg: GmmFitConfig, seed: int) -> QueryBatch:
    """The adaptive strategy: balance the batch, pick representative instances
    first, then informative instances from the remaining pool."""
    U = np.asarray(U, dtype=np.int64)
    if len(U) == 0:
        raise ValueError("empty unlabeled pool")
    alloc = balance(t, p)
    n_repr, n_info = alloc.n_repr, alloc.n_info
    if len(U) < p.b:
        # shrink keeping the allocation ratio, remainder to the larger share
        scale = len(U) / p.b
        n_repr, n_info = int(alloc.n_repr * scale), int(alloc.n_info * scale)
        rem = len(U) - n_repr - n_info
        if alloc.n_repr > alloc.n_info:
            n_repr += rem
        else:
            n_info += rem

    repr_part = (sample_representative(U, X, n_repr, cfg, child_seed(seed, 1))
                 if n_repr > 0 else _batch([], "representative", []))
    remaining = np.setdiff1d(U, np.asarray(repr_part.indices, dtype=np.int64))
    info_part = (sample_informative(remaining, X, clf, n_info, p.b, child_seed(seed, 2))
                 if n_info > 0 else _batch([], "informative", []))
    return _merge(repr_part, info_part)

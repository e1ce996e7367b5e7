"""Gaussian mixture density estimation: EM fitting, BIC model selection, scoring.

Full covariances with a small diagonal ridge; log-sum-exp throughout so that
densities stay finite and the recorded likelihood path is monotone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .cluster import kmeanspp_seed

_LOG_2PI = float(np.log(2.0 * np.pi))


def child_seed(seed: int, *tags: int) -> int:
    """Stable derived seed for a tagged sub-stream of `seed`."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *[int(t) & 0xFFFFFFFF for t in tags]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class GmmFitConfig:
    """EM controls. k_max=None means min(25, max(1, m // 10)) at fit time."""

    k_min: int = 1
    k_max: int | None = None
    max_em_iters: int = 200
    rel_tol: float = 1e-6
    cov_reg: float = 1e-6
    n_init: int = 3

    def __post_init__(self):
        if self.k_min < 1 or (self.k_max is not None and self.k_max < self.k_min):
            raise ValueError("need 1 <= k_min <= k_max")
        if self.rel_tol <= 0 or self.cov_reg <= 0:
            raise ValueError("rel_tol and cov_reg must be positive")
        if self.n_init < 1 or self.max_em_iters < 1:
            raise ValueError("n_init and max_em_iters must be >= 1")

    def k_range(self, m: int) -> range:
        hi = self.k_max if self.k_max is not None else min(25, max(1, m // 10))
        return range(self.k_min, max(self.k_min, min(hi, m)) + 1)


@dataclass(frozen=True)
class GmmModel:
    weights: np.ndarray  # (K,) simplex
    means: np.ndarray  # (K, d)
    covariances: np.ndarray  # (K, d, d)
    final_log_likelihood: float  # total over the fitted data, nats
    log_likelihood_path: tuple[float, ...] = field(default=(), repr=False)

    @property
    def K(self) -> int:
        return len(self.weights)

    @property
    def d(self) -> int:
        return self.means.shape[1]

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
            "final_log_likelihood": self.final_log_likelihood,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GmmModel":
        return cls(
            np.asarray(doc["weights"], dtype=np.float64),
            np.asarray(doc["means"], dtype=np.float64),
            np.asarray(doc["covariances"], dtype=np.float64),
            float(doc.get("final_log_likelihood", np.nan)),
        )


def _chol(cov: np.ndarray, reg: float) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    boosted = cov + 9.0 * reg * np.eye(cov.shape[0])
    try:
        return np.linalg.cholesky(boosted)
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError(
            "covariance not positive definite even after regularization"
        ) from None


def _component_log_probs(model: GmmModel, X: np.ndarray, reg: float = 1e-12) -> np.ndarray:
    """(m, K) matrix of ln(w_k) + ln N(x | mu_k, Sigma_k)."""
    m, d = X.shape
    out = np.empty((m, model.K))
    for k in range(model.K):
        L = _chol(model.covariances[k], reg)
        diff = X - model.means[k]
        sol = solve_triangular(L, diff.T, lower=True, check_finite=False)
        maha = np.sum(sol**2, axis=0)
        logdet = 2.0 * np.sum(np.log(np.diag(L)))
        w = max(float(model.weights[k]), np.finfo(np.float64).tiny)
        out[:, k] = np.log(w) - 0.5 * (d * _LOG_2PI + logdet + maha)
    return out


def _logsumexp_rows(M: np.ndarray) -> np.ndarray:
    hi = M.max(axis=1, keepdims=True)
    return (hi + np.log(np.exp(M - hi).sum(axis=1, keepdims=True))).ravel()


def log_density(model: GmmModel, x: np.ndarray) -> float:
    """ln of the mixture density at a single point."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if x.shape[1] != model.d:
        raise ValueError(f"dimension mismatch: x has {x.shape[1]}, model has {model.d}")
    return float(_logsumexp_rows(_component_log_probs(model, x))[0])


def score_samples(model: GmmModel, X: np.ndarray) -> np.ndarray:
    """Row-wise mixture log-density; output order matches input order."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.d:
        raise ValueError(f"expected (m, {model.d}) matrix, got {X.shape}")
    return _logsumexp_rows(_component_log_probs(model, X))


def _m_step(X: np.ndarray, resp: np.ndarray, reg: float):
    m, d = X.shape
    nk = resp.sum(axis=0) + 10 * np.finfo(np.float64).tiny
    weights = nk / nk.sum()
    means = (resp.T @ X) / nk[:, None]
    covs = np.empty((resp.shape[1], d, d))
    eye = reg * np.eye(d)
    for k in range(resp.shape[1]):
        diff = X - means[k]
        covs[k] = (diff * resp[:, k, None]).T @ diff / nk[k] + eye
    return weights, means, covs


def fit_em(X: np.ndarray, K: int, cfg: GmmFitConfig, seed: int) -> GmmModel:
    """Maximum-likelihood EM fit with `cfg.n_init` k-means++-seeded restarts.

    Returns the restart with the highest final log-likelihood (ties to the
    earlier restart). The recorded path is the total log-likelihood evaluated
    at the start of every EM iteration.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    m, d = X.shape
    if m < K:
        raise ValueError(f"m={m} rows cannot support K={K} components")

    base_cov = np.cov(X.T, bias=True).reshape(d, d) + cfg.cov_reg * np.eye(d)
    best: GmmModel | None = None
    for r in range(cfg.n_init):
        weights = np.full(K, 1.0 / K)
        means = kmeanspp_seed(X, K, child_seed(seed, r))
        covs = np.repeat(base_cov[None], K, axis=0)
        path: list[float] = []
        for _ in range(cfg.max_em_iters):
            model = GmmModel(weights, means, covs, np.nan)
            joint = _component_log_probs(model, X, cfg.cov_reg)
            row_tot = _logsumexp_rows(joint)
            ll = float(row_tot.sum())
            path.append(ll)
            if len(path) > 1 and ll - path[-2] < cfg.rel_tol * max(1.0, abs(ll)):
                break
            resp = np.exp(joint - row_tot[:, None])
            weights, means, covs = _m_step(X, resp, cfg.cov_reg)
        else:
            joint = _component_log_probs(GmmModel(weights, means, covs, np.nan), X, cfg.cov_reg)
            path.append(float(_logsumexp_rows(joint).sum()))
        cand = GmmModel(weights, means, covs, path[-1], tuple(path))
        if best is None or cand.final_log_likelihood > best.final_log_likelihood:
            best = cand
    assert best is not None
    return best


def bic(model: GmmModel, X: np.ndarray) -> float:
    """-2 logL + p ln(m) with p counting weights, means, and full covariances."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != model.d:
        raise ValueError("dimension mismatch")
    m = len(X)
    K, d = model.K, model.d
    p = (K - 1) + K * d + K * d * (d + 1) // 2
    return float(-2.0 * score_samples(model, X).sum() + p * np.log(m))


def select_k(X: np.ndarray, cfg: GmmFitConfig, seed: int) -> GmmModel:
    """Fit every K in the configured range and keep the minimum-BIC model.

    Ties break toward smaller K.
    """
    X = np.asarray(X, dtype=np.float64)
    m = len(X)
    if m < cfg.k_min:
        raise ValueError(f"m={m} below k_min={cfg.k_min}")
    best_model, best_bic = None, np.inf
    for K in cfg.k_range(m):
        model = fit_em(X, K, cfg, child_seed(seed, 1000 + K))
        score = bic(model, X)
        if score < best_bic:
            best_model, best_bic = model, score
    assert best_model is not None
    return best_model

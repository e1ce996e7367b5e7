"""RBF-kernel SVM trained by SMO, calibrated to probabilities by Platt scaling.

Class 1 (anomaly) is the positive class; its decision values feed the sigmoid
P(y=1|v) = 1 / (1 + exp(A*v + B)). Training sets with a single class, and
degenerate Platt fits (A >= 0), fall back to a smoothed class-prior predictor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist


@dataclass(frozen=True)
class KernelParams:
    gamma: float
    C: float

    def __post_init__(self):
        if self.gamma <= 0 or self.C <= 0:
            raise ValueError("gamma and C must be strictly positive")


@dataclass(frozen=True)
class PlattParams:
    A: float
    B: float


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray  # (s, d)
    dual_weights: np.ndarray  # (s,) alpha_i * y_i, y in {-1, +1}
    bias: float
    params: KernelParams


@dataclass(frozen=True)
class CalibratedClassifier:
    svm: SvmModel | None
    platt: PlattParams | None
    classes_seen: tuple[int, ...]
    prior_p1: float | None = None  # constant fallback P(anomaly)
    diagnostic: str | None = None

    def to_json(self) -> dict:
        doc = {
            "classes_seen": list(self.classes_seen),
            "prior_p1": self.prior_p1,
            "diagnostic": self.diagnostic,
            "svm": None,
            "platt": None,
        }
        if self.svm is not None:
            doc["svm"] = {
                "support_vectors": self.svm.support_vectors.tolist(),
                "dual_weights": self.svm.dual_weights.tolist(),
                "bias": self.svm.bias,
                "gamma": self.svm.params.gamma,
                "C": self.svm.params.C,
            }
        if self.platt is not None:
            doc["platt"] = {"A": self.platt.A, "B": self.platt.B}
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "CalibratedClassifier":
        svm = None
        if doc.get("svm"):
            s = doc["svm"]
            svm = SvmModel(
                np.asarray(s["support_vectors"], dtype=np.float64),
                np.asarray(s["dual_weights"], dtype=np.float64),
                float(s["bias"]),
                KernelParams(float(s["gamma"]), float(s["C"])),
            )
        platt = PlattParams(doc["platt"]["A"], doc["platt"]["B"]) if doc.get("platt") else None
        return cls(svm, platt, tuple(doc["classes_seen"]), doc.get("prior_p1"), doc.get("diagnostic"))


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * cdist(np.atleast_2d(A), np.atleast_2d(B), "sqeuclidean"))


def default_kernel_params(X: np.ndarray) -> KernelParams:
    """C = 1, gamma = 1 / (d * var(X)); on standardized features gamma ~ 1/d."""
    X = np.asarray(X, dtype=np.float64)
    var = float(X.var())
    d = X.shape[1]
    return KernelParams(1.0 / (d * var) if var > 0 else 1.0 / d, 1.0)


def _smo(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_passes: int):
    """Pairwise coordinate ascent on the soft-margin dual.

    Deterministic working-set choice: first index by KKT violation sweep,
    second by max |E_i - E_j| with in-order fallbacks. Terminates when a full
    sweep finds nothing to improve beyond `tol`.
    """
    m = len(y)
    alpha = np.zeros(m)
    bias = 0.0
    E = -y.astype(np.float64)  # f(x) - y at alpha = 0, b = 0
    snap = 1e-10 * C

    def take_step(i: int, j: int) -> bool:
        nonlocal bias, E
        if i == j:
            return False
        ai, aj, yi, yj = alpha[i], alpha[j], y[i], y[j]
        s = yi * yj
        if s > 0:
            lo, hi = max(0.0, ai + aj - C), min(C, ai + aj)
        else:
            lo, hi = max(0.0, aj - ai), min(C, C + aj - ai)
        if hi - lo < 1e-14:
            return False
        Ei, Ej = E[i], E[j]
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta > 1e-15:
            aj_new = np.clip(aj + yj * (Ei - Ej) / eta, lo, hi)
        else:
            # flat direction: objective is linear in aj, test both ends
            f1 = yi * (Ei + bias) - ai * K[i, i] - s * aj * K[i, j]
            f2 = yj * (Ej + bias) - s * ai * K[i, j] - aj * K[j, j]
            l1 = ai + s * (aj - lo)
            h1 = ai + s * (aj - hi)
            lo_obj = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * K[i, i] + 0.5 * lo * lo * K[j, j] + s * lo * l1 * K[i, j]
            hi_obj = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * K[i, i] + 0.5 * hi * hi * K[j, j] + s * hi * h1 * K[i, j]
            if lo_obj < hi_obj - 1e-12:
                aj_new = lo
            elif hi_obj < lo_obj - 1e-12:
                aj_new = hi
            else:
                return False
        if abs(aj_new - aj) < 1e-12 * (aj_new + aj + 1e-12):
            return False
        ai_new = ai + s * (aj - aj_new)
        if ai_new < snap:
            ai_new = 0.0
        elif ai_new > C - snap:
            ai_new = C
        if aj_new < snap:
            aj_new = 0.0
        elif aj_new > C - snap:
            aj_new = C
        b1 = bias - Ei - yi * (ai_new - ai) * K[i, i] - yj * (aj_new - aj) * K[i, j]
        b2 = bias - Ej - yi * (ai_new - ai) * K[i, j] - yj * (aj_new - aj) * K[j, j]
        if 0.0 < ai_new < C:
            b_new = b1
        elif 0.0 < aj_new < C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        E += yi * (ai_new - ai) * K[:, i] + yj * (aj_new - aj) * K[:, j] + (b_new - bias)
        alpha[i], alpha[j] = ai_new, aj_new
        bias = b_new
        return True

    def examine(i: int) -> bool:
        r = E[i] * y[i]
        if not ((r < -tol and alpha[i] < C) or (r > tol and alpha[i] > 0)):
            return False
        nonbound = np.flatnonzero((alpha > 0) & (alpha < C))
        if len(nonbound) > 1:
            j = int(nonbound[np.argmax(np.abs(E[nonbound] - E[i]))])
            if take_step(i, j):
                return True
        for j in nonbound:
            if take_step(i, int(j)):
                return True
        for j in range(m):
            if take_step(i, j):
                return True
        return False

    examine_all = True
    for _ in range(max_passes):
        E[:] = K @ (alpha * y) + bias - y  # refresh cache against drift
        targets = range(m) if examine_all else np.flatnonzero((alpha > 0) & (alpha < C))
        changed = sum(examine(int(i)) for i in targets)
        if examine_all:
            if changed == 0:
                break
            examine_all = False
        elif changed == 0:
            examine_all = True

    free = (alpha > 0) & (alpha < C)
    if free.any():
        bias = float(np.mean(y[free] - (K[free] @ (alpha * y))))
    return alpha, float(bias)


def dual_objective(K: np.ndarray, y: np.ndarray, alpha: np.ndarray) -> float:
    """W(alpha) = sum(alpha) - 1/2 alpha^T (yy^T * K) alpha."""
    v = alpha * y
    return float(alpha.sum() - 0.5 * v @ K @ v)


def _fit_platt(deci: np.ndarray, y: np.ndarray, max_iters: int = 100) -> PlattParams:
    """Newton fit of the calibration sigmoid with Platt's smoothed targets."""
    n_pos = int(np.sum(y > 0))
    n_neg = len(y) - n_pos
    t = np.where(y > 0, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    A, B = 0.0, float(np.log((n_neg + 1.0) / (n_pos + 1.0)))

    def nll(a: float, b: float) -> float:
        z = deci * a + b
        return float(np.sum(np.where(z >= 0, t * z + np.log1p(np.exp(-np.abs(z))),
                                     (t - 1.0) * z + np.log1p(np.exp(-np.abs(z))))))

    fval = nll(A, B)
    for _ in range(max_iters):
        z = deci * A + B
        p = np.where(z >= 0, np.exp(-z) / (1.0 + np.exp(-z)), 1.0 / (1.0 + np.exp(z)))
        w = p * (1.0 - p)
        h11 = 1e-12 + np.sum(deci * deci * w)
        h22 = 1e-12 + np.sum(w)
        h21 = np.sum(deci * w)
        g1 = np.sum(deci * (t - p))
        g2 = np.sum(t - p)
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= 1e-10:
            nA, nB = A + step * dA, B + step * dB
            nf = nll(nA, nB)
            if nf < fval + 1e-4 * step * gd:
                A, B, fval = nA, nB, nf
                break
            step *= 0.5
        else:
            break
    return PlattParams(float(A), float(B))


def train(X: np.ndarray, y: np.ndarray, params: KernelParams | None = None,
          seed: int = 0) -> CalibratedClassifier:
    """Fit the calibrated classifier on a labeled pool.

    `seed` is part of the interface for stochastic solver variants; the SMO
    and Platt fits here are fully deterministic.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise ValueError("empty training set")
    if X.ndim != 2 or len(y) != len(X):
        raise ValueError("X must be (m, d) with matching labels")
    classes = tuple(int(c) for c in np.unique(y))
    m = len(y)
    if len(classes) == 1:
        p_seen = (m + 1.0) / (m + 2.0)
        prior = p_seen if classes[0] == 1 else 1.0 - p_seen
        return CalibratedClassifier(None, None, classes, prior_p1=prior, diagnostic="single-class")

    if params is None:
        params = default_kernel_params(X)
    ysign = np.where(y == 1, 1.0, -1.0)
    K = rbf_kernel(X, X, params.gamma)
    alpha, bias = _smo(K, ysign, params.C, tol=1e-7, max_passes=2000)

    sv = alpha > 1e-12
    if not sv.any():
        sv = np.ones(m, dtype=bool)
    model = SvmModel(X[sv].copy(), (alpha * ysign)[sv], bias, params)

    deci = K @ (alpha * ysign) + bias
    platt = _fit_platt(deci, ysign)
    if platt.A >= 0:
        n1 = int(np.sum(y == 1))
        return CalibratedClassifier(model, None, classes,
                                    prior_p1=(n1 + 1.0) / (m + 2.0),
                                    diagnostic="platt-noninformative")
    return CalibratedClassifier(model, platt, classes)


def decision_value(model: SvmModel, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.support_vectors.shape[1]:
        raise ValueError("dimension mismatch")
    return float(decision_values(model, x[None, :])[0])


def decision_values(model: SvmModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != model.support_vectors.shape[1]:
        raise ValueError("dimension mismatch")
    return rbf_kernel(X, model.support_vectors, model.params.gamma) @ model.dual_weights + model.bias


def _sigmoid_p1(platt: PlattParams, v: np.ndarray) -> np.ndarray:
    z = platt.A * v + platt.B
    return np.where(z >= 0, np.exp(-z) / (1.0 + np.exp(-z)), 1.0 / (1.0 + np.exp(z)))


def predict_proba(clf: CalibratedClassifier, x: np.ndarray) -> tuple[float, float]:
    p = predict_proba_batch(clf, np.asarray(x, dtype=np.float64)[None, :])[0]
    return float(p[0]), float(p[1])


def predict_proba_batch(clf: CalibratedClassifier, X: np.ndarray) -> np.ndarray:
    """(m, 2) matrix of [P(normal), P(anomaly)] rows summing to 1."""
    X = np.asarray(X, dtype=np.float64)
    if clf.platt is None or clf.svm is None:
        p1 = np.full(len(X), clf.prior_p1)
    else:
        p1 = _sigmoid_p1(clf.platt, decision_values(clf.svm, X))
    return np.column_stack([1.0 - p1, p1])

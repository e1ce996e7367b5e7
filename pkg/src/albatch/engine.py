"""The active-learning driver: session state machine, oracle, experiment runner.

A session advances through propose_batch / submit_labels cycles. All
randomness is derived functionally from (base seed, phase, iteration), so a
session restored from a snapshot proposes exactly the batches an uninterrupted
run would, and strategies sharing a base seed start from identical pools.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field, replace

import numpy as np

from .classifier import CalibratedClassifier, KernelParams, predict_proba_batch, train
from .data import DataError, Dataset, init_labeled, stratified_split
from .metrics import MetricsRecord, discovery_count, prauc
from .mixture import GmmFitConfig, child_seed
from .strategies import (
    BalancingParams,
    QueryBatch,
    balance,
    sample_adaptive,
    sample_informative,
    sample_kmedoids,
    sample_max_entropy,
    sample_random,
    sample_representative,
)

STRATEGIES = ("random", "max_entropy", "kmedoids", "representative", "informative", "adaptive")

# seed-derivation phase tags
_SPLIT, _SEED_POOL, _TRAIN, _SAMPLE, _BOOTSTRAP = range(5)


class SessionError(RuntimeError):
    """A propose/submit call that violates the session state machine."""


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    strategy: str
    balancing: BalancingParams = BalancingParams(b=20, c=0.0, T1=0, T2=5)
    M: int = 4
    T: int = 20
    runs: int = 50
    base_seed: int = 0
    test_fraction: float = 0.2
    gmm: GmmFitConfig = field(default_factory=GmmFitConfig)
    kernel: KernelParams | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if self.M < 2 or self.M % 2:
            raise ValueError("M must be an even count >= 2 (per-class seeding)")
        if self.T < 1 or self.runs < 1:
            raise ValueError("T and runs must be >= 1")
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must be in (0, 1)")

    @property
    def b(self) -> int:
        return self.balancing.b

    def to_json(self) -> dict:
        doc = {
            "dataset": self.dataset, "strategy": self.strategy,
            "b": self.balancing.b, "c": self.balancing.c,
            "T1": self.balancing.T1, "T2": self.balancing.T2,
            "M": self.M, "T": self.T, "runs": self.runs,
            "base_seed": self.base_seed, "test_fraction": self.test_fraction,
            "gmm": {"k_min": self.gmm.k_min, "k_max": self.gmm.k_max,
                    "max_em_iters": self.gmm.max_em_iters, "rel_tol": self.gmm.rel_tol,
                    "cov_reg": self.gmm.cov_reg, "n_init": self.gmm.n_init},
            "kernel": None if self.kernel is None else {"gamma": self.kernel.gamma, "C": self.kernel.C},
        }
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentConfig":
        gmm = GmmFitConfig(**doc["gmm"]) if doc.get("gmm") else GmmFitConfig()
        kernel = KernelParams(**doc["kernel"]) if doc.get("kernel") else None
        return cls(
            dataset=doc["dataset"], strategy=doc["strategy"],
            balancing=BalancingParams(int(doc.get("b", 20)), float(doc.get("c", 0.0)),
                                      int(doc.get("T1", 0)), int(doc.get("T2", 5))),
            M=int(doc.get("M", 4)), T=int(doc.get("T", 20)), runs=int(doc.get("runs", 50)),
            base_seed=int(doc.get("base_seed", 0)),
            test_fraction=float(doc.get("test_fraction", 0.2)),
            gmm=gmm, kernel=kernel,
        )


@dataclass
class Oracle:
    """Simulated annotator answering queries from the ground-truth labels."""

    truth: np.ndarray

    def answer(self, batch: QueryBatch) -> dict[int, int]:
        return {i: int(self.truth[i]) for i in batch.indices}


@dataclass
class ALSession:
    id: str
    dataset: Dataset  # standardized features
    cfg: ExperimentConfig
    seed: int
    mode: str  # "replay" (ground truth known) | "live" (human labels only)
    t: int  # next iteration to propose; 0 = live bootstrap pending
    L: dict[int, int]
    U: np.ndarray
    test_indices: np.ndarray
    model: CalibratedClassifier | None
    pending: QueryBatch | None = None
    history: list[MetricsRecord] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    finished: bool = False

    @property
    def status(self) -> str:
        if self.finished:
            return "finished"
        return "awaiting_labels" if self.pending is not None else "awaiting_batch"


def _evaluate(s: ALSession, wall_ms: float, iteration: int) -> MetricsRecord:
    if s.mode == "replay":
        test_y = s.dataset.labels[s.test_indices]
        scores = predict_proba_batch(s.model, s.dataset.features[s.test_indices])[:, 1]
        pr = prauc(scores, test_y)
        discovered = discovery_count(s.L, s.dataset.labels)
    else:
        pr = None
        discovered = sum(1 for lab in s.L.values() if lab == 1)
    return MetricsRecord(iteration, len(s.L), pr, discovered, wall_ms)


def init_session(ds: Dataset, cfg: ExperimentConfig, seed: int,
                 mode: str = "replay", session_id: str | None = None) -> ALSession:
    """Set up pools and the initial classifier.

    Replay mode: stratified test split, per-class labeled seed from ground
    truth, theta_0 trained, iteration-0 record emitted. Live mode: every row is
    unlabeled and the first proposed batch is the M-instance random bootstrap.
    """
    if mode not in ("replay", "live"):
        raise ValueError("mode must be 'replay' or 'live'")
    sid = session_id or uuid.uuid4().hex[:12]
    if mode == "live":
        return ALSession(sid, ds, cfg, seed, mode, t=0, L={},
                         U=np.arange(ds.n, dtype=np.int64),
                         test_indices=np.empty(0, dtype=np.int64), model=None)

    if ds.n_anomalies == 0 or ds.n_anomalies == ds.n:
        raise DataError("replay experiments need both classes in the dataset")
    split = stratified_split(ds, cfg.test_fraction, child_seed(seed, _SPLIT))
    if ds.labels[split.test_indices].sum() == 0:
        raise DataError("test partition has no anomalies; PRAUC would be undefined")
    seeds = init_labeled(ds, cfg.M // 2, child_seed(seed, _SEED_POOL), within=split.train_indices)
    L = {int(i): int(ds.labels[i]) for i in seeds}
    U = np.setdiff1d(split.train_indices, seeds)
    t0 = time.perf_counter()
    model = train(ds.features[seeds], ds.labels[seeds], cfg.kernel, child_seed(seed, _TRAIN, 0))
    s = ALSession(sid, ds, cfg, seed, mode, t=1, L=L, U=U,
                  test_indices=split.test_indices, model=model)
    s.history.append(_evaluate(s, (time.perf_counter() - t0) * 1e3, iteration=0))
    return s


def propose_batch(s: ALSession) -> QueryBatch:
    """Draw the next batch with the configured sampler and mark it pending."""
    if s.finished:
        raise SessionError("session is finished")
    if s.pending is not None:
        raise SessionError("a pending batch must be answered (or cancelled) first")
    if len(s.U) == 0:
        raise SessionError("unlabeled pool is exhausted")

    cfg = s.cfg
    X = s.dataset.features
    b = min(cfg.b, len(s.U))
    sample_seed = child_seed(s.seed, _SAMPLE, s.t)
    if s.t == 0:  # live bootstrap: M uniform picks, labels queried from the human
        rng = np.random.default_rng(child_seed(s.seed, _BOOTSTRAP))
        picks = rng.choice(s.U, size=min(cfg.M, len(s.U)), replace=False)
        batch = QueryBatch(tuple(int(i) for i in picks),
                           ("random",) * len(picks), (0.0,) * len(picks))
    elif cfg.strategy == "random":
        batch = sample_random(s.U, b, sample_seed)
    elif cfg.strategy == "max_entropy":
        batch = sample_max_entropy(s.U, s.model, X, b)
    elif cfg.strategy == "kmedoids":
        batch = sample_kmedoids(s.U, X, b, sample_seed)
    elif cfg.strategy == "representative":
        batch = sample_representative(s.U, X, b, cfg.gmm, sample_seed)
    elif cfg.strategy == "informative":
        batch = sample_informative(s.U, X, s.model, b, cfg.b, sample_seed)
    elif cfg.strategy == "adaptive":
        batch = sample_adaptive(s.U, X, s.model, s.t, cfg.balancing, cfg.gmm, sample_seed)
    else:  # pragma: no cover - guarded by ExperimentConfig
        raise ValueError(f"unknown strategy {cfg.strategy!r}")
    s.pending = batch
    return batch


def cancel_batch(s: ALSession) -> None:
    s.pending = None


def submit_labels(s: ALSession, answers: dict[int, int]) -> ALSession:
    """Fold answered labels into the pools, retrain, record metrics.

    Atomic: any mismatch with the pending batch leaves the session unchanged.
    """
    if s.pending is None:
        raise SessionError("no pending batch to answer")
    expected = set(s.pending.indices)
    got = {int(k) for k in answers}
    if got != expected:
        missing, extra = expected - got, got - expected
        raise SessionError(f"answers do not cover the pending batch exactly "
                           f"(missing={sorted(missing)}, extra={sorted(extra)})")
    clean = {int(k): int(v) for k, v in answers.items()}
    if any(v not in (0, 1) for v in clean.values()):
        raise SessionError("labels must be 0 or 1")

    iteration = s.t
    s.L.update(clean)
    s.U = np.setdiff1d(s.U, np.fromiter(clean, dtype=np.int64, count=len(clean)))
    t0 = time.perf_counter()
    idx = np.fromiter(s.L.keys(), dtype=np.int64, count=len(s.L))
    lab = np.fromiter(s.L.values(), dtype=np.int64, count=len(s.L))
    s.model = train(s.dataset.features[idx], lab, s.cfg.kernel,
                    child_seed(s.seed, _TRAIN, iteration))
    s.history.append(_evaluate(s, (time.perf_counter() - t0) * 1e3, iteration))
    s.pending = None
    s.t = iteration + 1
    if len(s.U) == 0 or s.t > s.cfg.T:
        s.finished = True
    return s


def run_single(ds: Dataset, cfg: ExperimentConfig, run_index: int) -> list[MetricsRecord]:
    """One seeded oracle-answered run: T iterations or until the pool empties."""
    seed = cfg.base_seed + run_index
    s = init_session(ds, cfg, seed)
    oracle = Oracle(ds.labels)
    for _ in range(cfg.T):
        if len(s.U) == 0:
            break
        batch = propose_batch(s)
        submit_labels(s, oracle.answer(batch))
    return s.history


def run_experiment(ds: Dataset, cfg: ExperimentConfig) -> list[list[MetricsRecord]]:
    """cfg.runs independent seeded runs; series r uses seed base_seed + r."""
    return [run_single(ds, cfg, r) for r in range(cfg.runs)]


# --- session snapshots ------------------------------------------------------

def snapshot_session(s: ALSession) -> dict:
    return {
        "version": 1,
        "id": s.id,
        "dataset": s.dataset.name,
        "mode": s.mode,
        "seed": s.seed,
        "t": s.t,
        "finished": s.finished,
        "config": s.cfg.to_json(),
        "L": {str(k): v for k, v in s.L.items()},
        "U": [int(i) for i in s.U],
        "test_indices": [int(i) for i in s.test_indices],
        "pending": None if s.pending is None else {
            "indices": list(s.pending.indices),
            "provenance": list(s.pending.provenance),
            "scores": list(s.pending.scores),
        },
        "history": [r.to_json() for r in s.history],
        "events": list(s.events),
        "model": None if s.model is None else s.model.to_json(),
    }


def restore_session(doc: dict, ds: Dataset) -> ALSession:
    if doc.get("version") != 1:
        raise ValueError(f"unsupported snapshot version {doc.get('version')!r}")
    if doc["dataset"] != ds.name:
        raise ValueError(f"snapshot is for dataset {doc['dataset']!r}, got {ds.name!r}")
    pending = None
    if doc.get("pending"):
        p = doc["pending"]
        pending = QueryBatch(tuple(p["indices"]), tuple(p["provenance"]), tuple(p["scores"]))
    s = ALSession(
        id=doc["id"], dataset=ds, cfg=ExperimentConfig.from_json(doc["config"]),
        seed=int(doc["seed"]), mode=doc["mode"], t=int(doc["t"]),
        L={int(k): int(v) for k, v in doc["L"].items()},
        U=np.asarray(doc["U"], dtype=np.int64),
        test_indices=np.asarray(doc["test_indices"], dtype=np.int64),
        model=None if doc.get("model") is None else CalibratedClassifier.from_json(doc["model"]),
        pending=pending,
        history=[MetricsRecord.from_json(r) for r in doc["history"]],
        events=list(doc.get("events", [])),
        finished=bool(doc.get("finished", False)),
    )
    return s


def update_balancing(s: ALSession, c: float | None = None,
                     T1: int | None = None, T2: int | None = None) -> None:
    """Replace steering parameters between batches; logged in session events."""
    if s.pending is not None:
        raise SessionError("cannot change parameters while a batch is pending")
    old = s.cfg.balancing
    new = BalancingParams(old.b,
                          old.c if c is None else float(c),
                          old.T1 if T1 is None else int(T1),
                          old.T2 if T2 is None else int(T2))
    s.cfg = replace(s.cfg, balancing=new)
    s.events.append({"at_iteration": s.t, "event": "params",
                     "c": new.c, "T1": new.T1, "T2": new.T2})

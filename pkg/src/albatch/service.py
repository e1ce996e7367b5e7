"""HTTP session API for live human labeling and replay sessions.

A thin adapter over the engine: every request maps to one engine call under a
per-session lock, and every mutation snapshots the whole session to disk
(write-temp-then-rename) so a restarted service resumes mid-session exactly.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import engine
from .classifier import predict_proba_batch
from .data import DataError, Dataset, dataset_from_entry, load_manifest, standardize
from .engine import ALSession, ExperimentConfig, SessionError
from .strategies import BalancingParams, balance


@dataclass
class RegisteredDataset:
    name: str
    standardized: Dataset
    raw_features: np.ndarray
    feature_names: tuple[str, ...]


class DatasetRegistry:
    def __init__(self):
        self._entries: dict[str, RegisteredDataset] = {}

    def add(self, ds: Dataset) -> None:
        names = ds.feature_names or tuple(f"f{i}" for i in range(ds.d))
        self._entries[ds.name] = RegisteredDataset(ds.name, standardize(ds), ds.features, names)

    @classmethod
    def from_manifest(cls, manifest_path: str | Path) -> "DatasetRegistry":
        reg = cls()
        base = Path(manifest_path).parent
        for entry in load_manifest(manifest_path):
            reg.add(dataset_from_entry(entry, base))
        return reg

    def get(self, name: str) -> RegisteredDataset:
        if name not in self._entries:
            raise KeyError(name)
        return self._entries[name]

    def names(self) -> list[str]:
        return sorted(self._entries)


class SessionStore:
    """In-memory sessions with per-session locks and snapshot persistence."""

    def __init__(self, registry: DatasetRegistry, snapshot_dir: str | Path | None):
        self.registry = registry
        self.snapshot_dir = Path(snapshot_dir) if snapshot_dir else None
        self._sessions: dict[str, ALSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        if self.snapshot_dir:
            self.snapshot_dir.mkdir(parents=True, exist_ok=True)
            self._restore_all()

    def _restore_all(self) -> None:
        for path in sorted(self.snapshot_dir.glob("*.json")):
            doc = json.loads(path.read_text())
            try:
                reg = self.registry.get(doc["dataset"])
            except KeyError:
                continue  # snapshot for a dataset this manifest does not serve
            s = engine.restore_session(doc, reg.standardized)
            self._sessions[s.id] = s
            self._locks[s.id] = threading.Lock()

    def add(self, s: ALSession) -> None:
        with self._registry_lock:
            self._sessions[s.id] = s
            self._locks[s.id] = threading.Lock()
        self.persist(s)

    def get(self, sid: str) -> ALSession:
        if sid not in self._sessions:
            raise KeyError(sid)
        return self._sessions[sid]

    def all(self) -> list[ALSession]:
        return list(self._sessions.values())

    def lock(self, sid: str) -> threading.Lock:
        return self._locks[sid]

    def persist(self, s: ALSession) -> None:
        if not self.snapshot_dir:
            return
        doc = engine.snapshot_session(s)
        fd, tmp = tempfile.mkstemp(dir=self.snapshot_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(doc, fh, sort_keys=True)
            os.replace(tmp, self.snapshot_dir / f"{s.id}.json")
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)


def _allocation(s: ALSession) -> dict | None:
    if s.pending is not None:
        return {
            "n_repr": sum(p == "representative" for p in s.pending.provenance),
            "n_info": sum(p == "informative" for p in s.pending.provenance),
        }
    if s.finished or s.t < 1:
        return None
    if s.cfg.strategy != "adaptive":
        return None
    a = balance(s.t, s.cfg.balancing)
    return {"n_repr": a.n_repr, "n_info": a.n_info}


def _resource(s: ALSession) -> dict:
    return {
        "id": s.id,
        "dataset": s.dataset.name,
        "mode": s.mode,
        "status": s.status,
        "iteration": s.t,
        "strategy": s.cfg.strategy,
        "params": {
            "b": s.cfg.balancing.b, "c": s.cfg.balancing.c,
            "T1": s.cfg.balancing.T1, "T2": s.cfg.balancing.T2,
            "M": s.cfg.M, "T": s.cfg.T,
        },
        "allocation": _allocation(s),
        "pool": {"labeled": len(s.L), "unlabeled": int(len(s.U)),
                 "test": int(len(s.test_indices))},
        "metrics_available": s.mode == "replay",
    }


def create_app(registry: DatasetRegistry, snapshot_dir: str | Path | None = None,
               static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="albatch session API", version="1.0")
    store = SessionStore(registry, snapshot_dir)
    app.state.store = store

    @app.exception_handler(SessionError)
    async def _session_error(_: Request, exc: SessionError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    @app.get("/v1/schema")
    def schema():
        return app.openapi()

    @app.get("/v1/datasets")
    def datasets():
        out = []
        for name in registry.names():
            reg = registry.get(name)
            out.append({"name": name, "n": reg.standardized.n, "d": reg.standardized.d,
                        "anomalies": reg.standardized.n_anomalies})
        return {"datasets": out}

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: dict):
        name = body.get("dataset")
        if not isinstance(name, str):
            raise HTTPException(400, "dataset name is required")
        try:
            reg = registry.get(name)
        except KeyError:
            raise HTTPException(404, f"unknown dataset {name!r}") from None
        try:
            balancing = BalancingParams(
                int(body.get("b", 20)), float(body.get("c", 0.0)),
                int(body.get("T1", 0)), int(body.get("T2", 5)))
            cfg = ExperimentConfig(
                dataset=name,
                strategy=body.get("strategy", "adaptive"),
                balancing=balancing,
                M=int(body.get("M", 4)),
                T=int(body.get("T", 20)),
                runs=1,
                base_seed=int(body.get("seed", 0)),
                test_fraction=float(body.get("test_fraction", 0.2)),
            )
            mode = body.get("mode", "replay")
            s = engine.init_session(reg.standardized, cfg, int(body.get("seed", 0)), mode=mode)
        except (ValueError, DataError) as exc:
            raise HTTPException(400, str(exc)) from None
        store.add(s)
        return _resource(s)

    def _get_or_404(sid: str) -> ALSession:
        try:
            return store.get(sid)
        except KeyError:
            raise HTTPException(404, f"no session {sid!r}") from None

    @app.get("/v1/sessions")
    def list_sessions():
        return {"sessions": [_resource(s) for s in store.all()]}

    @app.get("/v1/sessions/{sid}")
    def get_session(sid: str):
        return _resource(_get_or_404(sid))

    @app.post("/v1/sessions/{sid}/batch")
    def propose(sid: str):
        s = _get_or_404(sid)
        with store.lock(sid):
            if s.finished or (s.pending is None and len(s.U) == 0):
                s.finished = True
                store.persist(s)
                raise HTTPException(410, "unlabeled pool exhausted; session finished")
            if s.pending is not None:
                raise HTTPException(409, "batch already pending; submit labels first")
            batch = engine.propose_batch(s)
            store.persist(s)
        reg = registry.get(s.dataset.name)
        rows = np.asarray(batch.indices, dtype=np.int64)
        p1 = (predict_proba_batch(s.model, s.dataset.features[rows])[:, 1]
              if s.model is not None else [None] * len(rows))
        payload = [
            {
                "index": int(i),
                "features": dict(zip(reg.feature_names, s.dataset.features[i].tolist())),
                "raw": dict(zip(reg.feature_names, reg.raw_features[i].tolist())),
                "probability_anomaly": None if p is None else float(p),
                "provenance": prov,
                "score": score,
            }
            for i, prov, score, p in zip(batch.indices, batch.provenance, batch.scores, p1)
        ]
        return {"session": _resource(s), "batch": payload}

    @app.post("/v1/sessions/{sid}/labels")
    def submit(sid: str, body: dict):
        s = _get_or_404(sid)
        labels = body.get("labels")
        if not isinstance(labels, dict):
            raise HTTPException(422, "body must carry a labels object {index: 0|1}")
        with store.lock(sid):
            if s.pending is None:
                raise HTTPException(409, "no pending batch")
            try:
                answers = {int(k): int(v) for k, v in labels.items()}
            except (TypeError, ValueError):
                raise HTTPException(422, "labels must map integer indices to 0/1") from None
            try:
                engine.submit_labels(s, answers)
            except SessionError as exc:
                raise HTTPException(422, str(exc)) from None
            store.persist(s)
        rec = s.history[-1]
        return {"session": _resource(s), "record": rec.to_json()}

    @app.patch("/v1/sessions/{sid}/params")
    def patch_params(sid: str, body: dict):
        s = _get_or_404(sid)
        with store.lock(sid):
            if s.pending is not None:
                raise HTTPException(409, "cannot steer while a batch is pending")
            try:
                engine.update_balancing(
                    s,
                    c=body.get("c"),
                    T1=body.get("T1"),
                    T2=body.get("T2"),
                )
            except (ValueError, TypeError) as exc:
                raise HTTPException(400, str(exc)) from None
            store.persist(s)
        return _resource(s)

    @app.get("/v1/sessions/{sid}/metrics")
    def metrics(sid: str):
        s = _get_or_404(sid)
        return {
            "history": [r.to_json() for r in s.history],
            "pool": {"labeled": len(s.L), "unlabeled": int(len(s.U))},
            "metrics_available": s.mode == "replay",
            "events": list(s.events),
        }

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app

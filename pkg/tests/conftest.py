import json
from pathlib import Path

import numpy as np
import pytest

from albatch.data import Dataset

ROOT = Path(__file__).resolve().parents[1]
GOLDEN_BALANCE = ROOT / "shared" / "balance_golden.json"


@pytest.fixture(scope="session")
def balance_golden():
    return json.loads(GOLDEN_BALANCE.read_text())["cases"]


def two_blobs(n_per=30, offset=10.0, d=2, seed=0):
    """Two unit-covariance blobs, second one labeled anomalous."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n_per, d))
    b = rng.standard_normal((n_per, d))
    b[:, 0] += offset
    X = np.vstack([a, b])
    y = np.array([0] * n_per + [1] * n_per)
    return X, y


def tiny_dataset(n=120, d=3, n_anom=12, seed=0, name="tiny") -> Dataset:
    """Small separable dataset for fast engine/service tests."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    y = np.zeros(n, dtype=int)
    y[:n_anom] = 1
    X[:n_anom] += 4.0
    return Dataset(name, X, y)


def strip_wall_time(snapshot: dict) -> dict:
    """Session state minus measured timings (the deterministic part)."""
    out = json.loads(json.dumps(snapshot))
    for rec in out.get("history", []):
        rec.pop("wall_time_ms", None)
    return out


def smoke_run_manifest(tmp_path: Path, runs=2, T=2) -> Path:
    """The deterministic smoke manifest used by cmd_run tests."""
    doc = {
        "output_dir": str(tmp_path / "results"),
        "emit": ["jsonl", "csv"],
        "datasets": [
            {
                "name": "smoke-blobs",
                "kind": "synthetic",
                "seed": 5,
                "spec": {
                    "n_normal": 110,
                    "normal_components": [[[0.0, 0.0, 0.0], 1.0], [[6.0, 0.0, 0.0], 1.0]],
                    "n_anomaly_cluster": 6,
                    "anomaly_cluster_offset": 6.0,
                    "n_anomaly_scatter": 4,
                    "d": 3,
                },
            }
        ],
        "strategies": ["adaptive", "random"],
        "b": 10,
        "M": 4,
        "T": T,
        "c": 0.0,
        "T1": 0,
        "T2": 3,
        "runs": runs,
        "base_seed": 7,
        "test_fraction": 0.2,
        "gmm": {"k_max": 3, "n_init": 1, "rel_tol": 1e-4, "max_em_iters": 50},
    }
    path = tmp_path / "smoke_manifest.json"
    path.write_text(json.dumps(doc, indent=2))
    return path

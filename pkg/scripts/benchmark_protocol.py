#!/usr/bin/env python3
"""Emit the run manifest for the full benchmark protocol.

Settings: b=20, M=4, c=0, T1=0, T2=5, 50 runs, stratified 80/20, all four
strategies under shared per-run seeds. Point it at a dataset manifest produced
by `albatch prepare` (real UCI data) or scripts/make_standins.py.

Usage: python scripts/benchmark_protocol.py <dataset_manifest.json> [out.json]
"""

import json
import sys
from pathlib import Path


def main(dataset_manifest: Path, out: Path) -> None:
    datasets = json.loads(dataset_manifest.read_text())["datasets"]
    for e in datasets:
        if e.get("kind", "csv") == "csv" and not Path(e["path"]).is_absolute():
            e["path"] = str((dataset_manifest.parent / e["path"]).resolve())
    doc = {
        "output_dir": "results/protocol",
        "emit": ["jsonl", "csv"],
        "datasets": datasets,
        "strategies": ["adaptive", "max_entropy", "kmedoids", "random"],
        "b": 20, "M": 4, "T": 15,
        "c": 0.0, "T1": 0, "T2": 5,
        "runs": 50, "base_seed": 0, "test_fraction": 0.2,
        "gmm": {"k_min": 1, "k_max": 10, "n_init": 2,
                "rel_tol": 1e-4, "max_em_iters": 100},
    }
    out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out}; run with: albatch run {out}")


if __name__ == "__main__":
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    main(Path(sys.argv[1]),
         Path(sys.argv[2]) if len(sys.argv) > 2 else Path("protocol_manifest.json"))

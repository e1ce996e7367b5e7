#!/usr/bin/env python3
"""Write the synthetic stand-in datasets as prepared CSVs plus a manifest.

Gives `albatch run` / `albatch serve` something to chew on when the raw UCI
files are not available. Usage: python scripts/make_standins.py [out_dir]
"""

import csv
import json
import sys
from pathlib import Path

from albatch.data import STANDIN_SPECS, make_standin


def main(out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for name in STANDIN_SPECS:
        ds = make_standin(name)
        path = out_dir / f"{name}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"f{i}" for i in range(ds.d)] + ["label"])
            for row, lab in zip(ds.features, ds.labels):
                w.writerow([f"{v:.10g}" for v in row] + [int(lab)])
        entries.append({
            "name": name, "kind": "csv", "path": path.name,
            "label_column": "label", "anomaly_value": "1",
            "expected": {"n": ds.n, "d": ds.d, "anomalies": ds.n_anomalies},
        })
        print(f"{name}: n={ds.n} d={ds.d} anomalies={ds.n_anomalies}")
    manifest = out_dir / "manifest.json"
    manifest.write_text(json.dumps({"datasets": entries}, indent=2, sort_keys=True) + "\n")
    print(f"manifest: {manifest}")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data/standins"))

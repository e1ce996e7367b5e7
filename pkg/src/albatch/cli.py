"""Command-line entry points: dataset preparation, experiment sweeps, service.

Exit codes: 0 success, 2 configuration/usage error, 3 data error, 4 runtime
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .data import DataError, Dataset, dataset_from_entry, load_csv, load_manifest, standardize, validate_counts
from .engine import STRATEGIES, ExperimentConfig, run_single
from .metrics import MetricsRecord
from .mixture import GmmFitConfig
from .strategies import BalancingParams

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4

# published benchmark shapes after preparation: (n, d, anomalies)
PREPARE_TARGETS = {
    "abalone": (1920, 9, 29),
    "ann_thyroid_1v3": (3251, 21, 73),
    "cardiotocography": (1700, 22, 45),
}


class ConfigError(ValueError):
    pass


# --- prepare ----------------------------------------------------------------

def _prepare_abalone(raw_path: Path) -> tuple[list[str], list[list[str]]]:
    """Rings {8,9,10} are normal, {3,21} anomalous; sex one-hot, first level dropped."""
    header = ["sex_F", "sex_I", "length", "diameter", "height", "whole_weight",
              "shucked_weight", "viscera_weight", "shell_weight", "label"]
    rows = []
    with raw_path.open() as fh:
        for line in fh:
            cells = line.strip().split(",")
            if len(cells) != 9:
                continue
            sex, *nums, rings = cells
            rings = int(rings)
            if rings in (8, 9, 10):
                label = "0"
            elif rings in (3, 21):
                label = "1"
            else:
                continue
            rows.append([
                "1" if sex == "F" else "0",
                "1" if sex == "I" else "0",
                *nums, label,
            ])
    return header, rows


def _prepare_thyroid(raw_path: Path) -> tuple[list[str], list[list[str]]]:
    """ann-thyroid class 1 (hypo) vs class 3 (normal), from the *test* file
    (the only split whose counts match the published benchmark shape)."""
    rows = []
    with raw_path.open() as fh:
        for line in fh:
            cells = line.split()
            if len(cells) != 22:
                continue
            *feats, klass = cells
            if klass == "1":
                rows.append([*feats, "1"])
            elif klass == "3":
                rows.append([*feats, "0"])
    header = [f"f{i}" for i in range(1, 22)] + ["label"]
    return header, rows


def _prepare_cardio(raw_path: Path, sample_seed: int = 0) -> tuple[list[str], list[list[str]]]:
    """NSP 1 is normal; 45 pathologic (NSP 3) rows subsampled deterministically."""
    with raw_path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        drop = {name for name in header if name.upper() in ("NSP", "CLASS")}
        if "NSP" not in [h.upper() for h in header]:
            raise DataError(f"{raw_path}: no NSP column in header")
        nsp_pos = [h.upper() for h in header].index("NSP")
        keep_pos = [i for i, h in enumerate(header) if h not in drop]
        normal, pathologic = [], []
        for cells in reader:
            if not cells:
                continue
            try:
                nsp = int(float(cells[nsp_pos]))
            except ValueError:
                continue
            row = [cells[i] for i in keep_pos]
            if nsp == 1:
                normal.append(row)
            elif nsp == 3:
                pathologic.append(row)
    rng = np.random.default_rng(sample_seed)
    chosen = sorted(rng.choice(len(pathologic), size=min(45, len(pathologic)), replace=False))
    rows = [[*r, "0"] for r in normal] + [[*pathologic[i], "1"] for i in chosen]
    return [header[i] for i in keep_pos] + ["label"], rows


_PREPARERS = {
    "abalone": _prepare_abalone,
    "ann_thyroid_1v3": _prepare_thyroid,
    "cardiotocography": _prepare_cardio,
}


def cmd_prepare(name: str, raw: Path, out: Path, manifest: Path | None,
                tolerance: float) -> int:
    if name not in _PREPARERS:
        raise ConfigError(f"unknown dataset {name!r}; choose from {sorted(_PREPARERS)}")
    if not raw.exists():
        raise DataError(f"no such raw file: {raw}")
    header, rows = _PREPARERS[name](raw)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    ds = load_csv(out, "label", "1", name=name)
    n, d, anom = PREPARE_TARGETS[name]
    problems = validate_counts(ds, {"n": n, "d": d, "anomalies": anom}, tolerance)
    if problems:
        print(f"{name}: prepared file does not match the expected benchmark shape:", file=sys.stderr)
        for p in problems:
            print(f"  {p}", file=sys.stderr)
        return EXIT_DATA
    manifest = manifest or out.parent / "manifest.json"
    doc = {"datasets": []}
    if manifest.exists():
        doc = json.loads(manifest.read_text())
        doc["datasets"] = [e for e in doc.get("datasets", []) if e.get("name") != name]
    doc["datasets"].append({
        "name": name, "kind": "csv",
        "path": os.path.relpath(out, manifest.parent),
        "label_column": "label", "anomaly_value": "1",
        "expected": {"n": ds.n, "d": ds.d, "anomalies": ds.n_anomalies},
    })
    manifest.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"{name}: wrote {out} (n={ds.n}, d={ds.d}, anomalies={ds.n_anomalies}); "
          f"manifest updated at {manifest}")
    return EXIT_OK


# --- run ---------------------------------------------------------------------

def _config_for(manifest: dict, dataset: str, strategy: str) -> ExperimentConfig:
    gmm = GmmFitConfig(**manifest["gmm"]) if manifest.get("gmm") else GmmFitConfig()
    kernel = None
    return ExperimentConfig(
        dataset=dataset, strategy=strategy,
        balancing=BalancingParams(int(manifest.get("b", 20)), float(manifest.get("c", 0.0)),
                                  int(manifest.get("T1", 0)), int(manifest.get("T2", 5))),
        M=int(manifest.get("M", 4)), T=int(manifest.get("T", 20)),
        runs=int(manifest.get("runs", 50)), base_seed=int(manifest.get("base_seed", 0)),
        test_fraction=float(manifest.get("test_fraction", 0.2)),
        gmm=gmm, kernel=kernel,
    )


def _run_cell(payload: tuple[Dataset, ExperimentConfig, int]) -> list[MetricsRecord]:
    ds, cfg, run_index = payload
    return run_single(ds, cfg, run_index)


def load_run_manifest(path: Path) -> dict:
    if not path.exists():
        raise ConfigError(f"no such manifest: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    strategies = doc.get("strategies")
    if not strategies:
        raise ConfigError(f"{path}: manifest needs a non-empty 'strategies' list")
    unknown = set(strategies) - set(STRATEGIES)
    if unknown:
        raise ConfigError(f"unknown strategies {sorted(unknown)}; choose from {STRATEGIES}")
    if not doc.get("datasets"):
        raise ConfigError(f"{path}: manifest needs a non-empty 'datasets' list")
    return doc


def cmd_run(manifest_path: Path, workers: int, out_dir: Path | None) -> int:
    doc = load_run_manifest(manifest_path)
    out = Path(out_dir or os.environ.get("ALBATCH_OUT_DIR") or doc.get("output_dir", "results"))
    out.mkdir(parents=True, exist_ok=True)
    emit = doc.get("emit", ["jsonl", "csv"])

    datasets: dict[str, Dataset] = {}
    for entry in doc["datasets"]:
        ds = dataset_from_entry(entry, manifest_path.parent)
        datasets[entry["name"]] = standardize(ds)

    cells = [
        (name, strategy, r)
        for name in datasets
        for strategy in doc["strategies"]
        for r in range(int(doc.get("runs", 50)))
    ]
    started = time.time()
    payloads = [(datasets[n], _config_for(doc, n, s), r) for (n, s, r) in cells]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, payloads, chunksize=1))
    else:
        results = [_run_cell(p) for p in payloads]

    rows = []
    for (name, strategy, r), history in zip(cells, results):
        for rec in history:
            row = {"dataset": name, "strategy": strategy, "run": r}
            row.update(rec.to_json(include_wall_time=False))
            rows.append(row)

    if "jsonl" in emit:
        with (out / "results.jsonl").open("w") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    if "csv" in emit:
        cols = ["dataset", "strategy", "run", "iteration", "labels_used",
                "prauc", "anomalies_discovered"]
        with (out / "results.csv").open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            for row in rows:
                w.writerow({c: ("" if row[c] is None else row[c]) for c in cols})

    with (out / "run_log.txt").open("a") as fh:
        fh.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} ran {len(cells)} cells "
                 f"in {time.time() - started:.1f}s (workers={workers})\n")

    print(f"\nfinal-iteration mean PRAUC ({doc.get('runs', 50)} runs)")
    print(f"{'dataset':<24} {'strategy':<16} {'PRAUC':>8}")
    for name in datasets:
        for strategy in doc["strategies"]:
            finals = [h[-1].prauc for (n, s, r), h in zip(cells, results)
                      if n == name and s == strategy and h[-1].prauc is not None]
            shown = f"{np.mean(finals):8.4f}" if finals else "     n/a"
            print(f"{name:<24} {strategy:<16} {shown}")
    return EXIT_OK


# --- selfcheck ---------------------------------------------------------------

REQUIRED_KEYS = {"dataset", "strategy", "run", "iteration", "labels_used",
                 "prauc", "anomalies_discovered"}


def cmd_selfcheck(results_path: Path) -> int:
    if not results_path.exists():
        raise DataError(f"no such results file: {results_path}")
    series: dict[tuple, list[dict]] = {}
    with results_path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError:
                raise DataError(f"{results_path}:{lineno}: not valid JSON") from None
            missing = REQUIRED_KEYS - row.keys()
            if missing:
                raise DataError(f"{results_path}:{lineno}: missing keys {sorted(missing)}")
            if row["prauc"] is not None and not 0.0 <= row["prauc"] <= 1.0:
                raise DataError(f"{results_path}:{lineno}: prauc out of [0,1]")
            series.setdefault((row["dataset"], row["strategy"], row["run"]), []).append(row)
    for key, rows in series.items():
        iters = [r["iteration"] for r in rows]
        if iters != list(range(len(rows))):
            raise DataError(f"{key}: iterations not consecutive from 0: {iters}")
        for a, b in zip(rows, rows[1:]):
            if b["anomalies_discovered"] < a["anomalies_discovered"]:
                raise DataError(f"{key}: anomalies_discovered decreased")
            if b["labels_used"] <= a["labels_used"]:
                raise DataError(f"{key}: labels_used did not grow")
    print(f"selfcheck ok: {sum(len(v) for v in series.values())} records, "
          f"{len(series)} series")
    return EXIT_OK


# --- serve --------------------------------------------------------------------

def cmd_serve(bind: str, manifest_path: Path, snapshots: Path, static_dir: Path | None) -> int:
    import uvicorn

    from .service import DatasetRegistry, create_app

    registry = DatasetRegistry.from_manifest(manifest_path)
    app = create_app(registry, snapshots, static_dir)
    host, _, port = bind.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="info")
    return EXIT_OK


# --- entry -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="albatch", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="transform a raw UCI file into a prepared CSV")
    p.add_argument("name", choices=sorted(_PREPARERS))
    p.add_argument("raw", type=Path)
    p.add_argument("out", type=Path)
    p.add_argument("--manifest", type=Path, default=None)
    p.add_argument("--tolerance", type=float, default=0.02)

    p = sub.add_parser("run", help="run the experiment grid of a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--workers", type=int,
                   default=int(os.environ.get("ALBATCH_WORKERS", "1")))
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("serve", help="serve the labeling session API")
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--snapshots", type=Path, default=Path("snapshots"))
    p.add_argument("--static", type=Path, default=None)

    p = sub.add_parser("selfcheck", help="validate a results JSONL file")
    p.add_argument("results", type=Path)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "prepare":
            return cmd_prepare(args.name, args.raw, args.out, args.manifest, args.tolerance)
        if args.command == "run":
            return cmd_run(args.manifest, args.workers, args.out)
        if args.command == "serve":
            return cmd_serve(args.bind, args.manifest, args.snapshots, args.static)
        if args.command == "selfcheck":
            return cmd_selfcheck(args.results)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

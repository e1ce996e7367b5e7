#!/usr/bin/env python3
"""Render PRAUC and anomaly-discovery curves (mean with 95% CI bands) from a
results.csv produced by `albatch run`.

Usage: python scripts/plot_curves.py results/results.csv [out_dir]
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

from albatch.metrics import aggregate

COLORS = {"adaptive": "tab:red", "max_entropy": "tab:blue",
          "kmedoids": "tab:green", "random": "tab:gray",
          "representative": "tab:purple", "informative": "tab:orange"}


def curves_for(df, value_col, clip):
    out = {}
    for strategy, grp in df.groupby("strategy"):
        series = [run_df.sort_values("iteration")[value_col].tolist()
                  for _, run_df in grp.groupby("run")]
        out[strategy] = aggregate(series, clip=clip)
    return out


def main(results_csv: Path, out_dir: Path) -> None:
    df = pd.read_csv(results_csv)
    out_dir.mkdir(parents=True, exist_ok=True)
    for dataset, ddf in df.groupby("dataset"):
        base = ddf.groupby(["strategy", "run"])["labels_used"].min().min()
        step = ddf[ddf.iteration == 1]["labels_used"].min() - base
        x = sorted(ddf["iteration"].unique())
        labels_axis = [base + step * t for t in x]
        for col, ylabel, clip in (("prauc", "PRAUC", (0, 1)),
                                  ("anomalies_discovered", "true anomalies discovered", None)):
            sub = ddf.dropna(subset=[col]) if col == "prauc" else ddf
            if sub.empty:
                continue
            fig, ax = plt.subplots(figsize=(5, 3.4))
            for strategy, curve in curves_for(sub, col, clip).items():
                color = COLORS.get(strategy)
                ax.plot(labels_axis[: len(curve.mean)], curve.mean,
                        label=strategy, color=color)
                ax.fill_between(labels_axis[: len(curve.mean)], curve.ci_low,
                                curve.ci_high, alpha=0.15, color=color)
            ax.set_xlabel("size of training set")
            ax.set_ylabel(ylabel)
            ax.set_title(dataset)
            ax.legend(fontsize=8)
            fig.tight_layout()
            target = out_dir / f"{dataset}_{col}.png"
            fig.savefig(target, dpi=150)
            plt.close(fig)
            print(f"wrote {target}")


if __name__ == "__main__":
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    main(Path(sys.argv[1]), Path(sys.argv[2]) if len(sys.argv) > 2 else Path("plots"))

"""Render figures from benchmark reports and tuner timing tables.

This is the separate consumer of the delimited output the bench CLI writes:
given report files (JSON or CSV) it draws the phase timings and the
per-partition format assignment; given a tuner timing-table CSV it draws one
heatmap of median SpMV times per partition. Figures are written as PNG files
next to their input unless an output directory is given.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .tuner import FORMATS, TIMING_TABLE_COLUMNS, read_timing_table

_PHASE_FIELDS = (
    ("setup_seconds", "setup"),
    ("reference_spmv_seconds", "reference"),
    ("optimized_spmv_seconds", "optimized"),
    ("cg_seconds", "cg"),
)


def _is_timing_table(path: str) -> bool:
    try:
        with open(path, "r", encoding="ascii") as fh:
            first = fh.readline().strip()
    except OSError:
        return False
    return first == ",".join(TIMING_TABLE_COLUMNS)


def _load_report(path: str) -> dict:
    """Report dict from a JSON report or a best-effort view of a CSV one."""
    with open(path, "r", encoding="ascii") as fh:
        head = fh.read(1)
        fh.seek(0)
        if head == "{":
            return json.load(fh)
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: empty report")
    first = rows[0]

    def opt_float(name):
        return float(first[name]) if first.get(name) else None

    return {
        "setup_seconds": opt_float("setup_seconds"),
        "reference_spmv_seconds": opt_float("reference_spmv_seconds"),
        "optimized_spmv_seconds": opt_float("optimized_spmv_seconds"),
        "cg_seconds": opt_float("cg_seconds"),
        "spmv_ratio": opt_float("spmv_ratio"),
        "partitions": [
            {
                "partition": int(r["partition"]),
                "local_format": r["local_format"],
                "remote_format": r["remote_format"],
                "local_nnz": int(r["local_nnz"]),
                "remote_nnz": int(r["remote_nnz"]),
            }
            for r in rows
        ],
    }


def _out_path(in_path: str, outdir: str | None, suffix: str) -> str:
    stem = os.path.splitext(os.path.basename(in_path))[0]
    directory = outdir if outdir is not None else (os.path.dirname(in_path) or ".")
    os.makedirs(directory, exist_ok=True)
    return os.path.join(directory, f"{stem}_{suffix}.png")


def plot_report(path: str, outdir: str | None = None) -> list[str]:
    """Phase-timing bars and per-partition assignment chart for one report."""
    report = _load_report(path)
    written = []

    labels, seconds = [], []
    for key, label in _PHASE_FIELDS:
        if report.get(key) is not None:
            labels.append(label)
            seconds.append(report[key])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(labels, seconds, color="#4878d0")
    ax.set_ylabel("seconds")
    title = "phase timings"
    if report.get("spmv_ratio") is not None:
        title += f" (SpMV ratio {report['spmv_ratio']:.3f})"
    ax.set_title(title)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    target = _out_path(path, outdir, "phases")
    fig.savefig(target, bbox_inches="tight", dpi=150)
    plt.close(fig)
    written.append(target)

    parts = report.get("partitions") or []
    if parts:
        idx = np.arange(len(parts))
        local_nnz = [p["local_nnz"] for p in parts]
        remote_nnz = [p["remote_nnz"] for p in parts]
        fig, ax = plt.subplots(figsize=(max(6, 0.8 * len(parts)), 4))
        ax.bar(idx - 0.2, local_nnz, width=0.4, label="local nnz", color="#4878d0")
        ax.bar(idx + 0.2, remote_nnz, width=0.4, label="remote nnz", color="#ee854a")
        ax.set_xticks(idx)
        ax.set_xticklabels(
            [f"{p['partition']}\n{p['local_format']}/{p['remote_format']}"
             for p in parts],
            fontsize=8,
        )
        ax.set_xlabel("partition (local/remote format)")
        ax.set_ylabel("stored entries")
        ax.set_title("per-partition split and format assignment")
        ax.legend(frameon=False)
        ax.spines["right"].set_visible(False)
        ax.spines["top"].set_visible(False)
        target = _out_path(path, outdir, "partitions")
        fig.savefig(target, bbox_inches="tight", dpi=150)
        plt.close(fig)
        written.append(target)
    return written


def plot_timing_table(path: str, outdir: str | None = None) -> list[str]:
    """Heatmaps of median SpMV seconds per (local, remote) combination."""
    table = read_timing_table(path)
    nparts = table.npartitions
    ncols = min(nparts, 4)
    nrows = (nparts + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, squeeze=False,
                             figsize=(3.2 * ncols, 3.0 * nrows))
    names = [f.name for f in FORMATS]
    for k in range(nparts):
        ax = axes[k // ncols][k % ncols]
        grid = np.full((len(FORMATS), len(FORMATS)), np.nan)
        for i, lf in enumerate(FORMATS):
            for j, rf in enumerate(FORMATS):
                if (k, lf, rf) in table.entries:
                    grid[i, j] = table.entries[(k, lf, rf)]
        image = ax.imshow(grid, cmap="viridis")
        ax.set_xticks(range(len(FORMATS)), names, fontsize=8)
        ax.set_yticks(range(len(FORMATS)), names, fontsize=8)
        ax.set_xlabel("remote", fontsize=8)
        ax.set_ylabel("local", fontsize=8)
        ax.set_title(f"partition {k}", fontsize=9)
        for i in range(len(FORMATS)):
            for j in range(len(FORMATS)):
                text = "skip" if np.isnan(grid[i, j]) else f"{grid[i, j]:.2e}"
                ax.text(j, i, text, ha="center", va="center", fontsize=7,
                        color="white")
        fig.colorbar(image, ax=ax, shrink=0.8)
    for k in range(nparts, nrows * ncols):
        axes[k // ncols][k % ncols].axis("off")
    fig.suptitle("median SpMV seconds per format combination")
    target = _out_path(path, outdir, "formats")
    fig.savefig(target, bbox_inches="tight", dpi=150)
    plt.close(fig)
    return [target]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dynsparse-plot",
        description="Render PNG figures from dynsparse-bench reports and "
                    "tuner timing tables.",
    )
    parser.add_argument("inputs", nargs="+",
                        help="report files (JSON or CSV) or timing-table CSVs")
    parser.add_argument("-o", "--outdir", default=None,
                        help="figure directory (default: next to each input)")
    args = parser.parse_args(argv)
    written = []
    for path in args.inputs:
        if _is_timing_table(path):
            written.extend(plot_timing_table(path, args.outdir))
        else:
            written.extend(plot_report(path, args.outdir))
    for target in written:
        print(target)
    return 0


if __name__ == "__main__":
    sys.exit(main())

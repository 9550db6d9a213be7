"""Naive per-partition format auto-tuner.

Profiling is offline: every (local, remote) format combination is converted
in place, timed over a fixed number of distributed SpMV repetitions (one
untimed warm-up first), and the per-partition medians land in a TimingTable.
Selection is then a pure lookup. Combinations whose conversion fails (for
example DIA fill overflow on an irregular remote part) are recorded as
skipped rather than aborting the profile.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DynSparseError, EmptySearchSpace
from .formats import DenseVector, FormatId
from .datamove import convert_inplace
from .kernels import ExecBackend
from .stencil import PartitionedProblem, SplitMatrix, distributed_spmv

FORMATS = (FormatId.COO, FormatId.CSR, FormatId.DIA)

TIMING_TABLE_COLUMNS = ("partition", "local_format", "remote_format",
                        "median_seconds", "reps")

Cell = tuple[int, FormatId, FormatId]


@dataclass
class TimingTable:
    """Median SpMV seconds per (partition, local format, remote format).

    ``skipped`` holds the cells whose conversion errored; every cell is
    either present in ``entries`` or in ``skipped``.
    """

    entries: dict[Cell, float]
    reps: int
    skipped: set[Cell] = field(default_factory=set)
    npartitions: int = 1


@dataclass
class FormatPlan:
    """Per-partition (local_format, remote_format) assignment."""

    assignments: list[tuple[FormatId, FormatId]]


def profile_formats(backend: ExecBackend, problem: PartitionedProblem,
                    splits: list[SplitMatrix], reps: int,
                    fill_limit: int | None = None) -> TimingTable:
    """Time distributed SpMV for each format combination.

    For every combination both parts of every partition are converted in
    place, one warm-up call runs untimed, then ``reps`` timed calls record
    each partition's kernel time; the median per partition fills the table.
    Partitions whose conversion fails run (and stay) CSR for that
    combination and their cell lands in ``skipped``. All matrices are
    restored to CSR before returning.

    On a problem without ghosts the remote part is empty and its format
    cannot matter, so only remote=CSR is measured and the cells are
    replicated across the remote axis (exact ties, so selection cannot
    depend on remote-format noise).
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    nparts = problem.npartitions
    local_n = problem.spec.local_points
    no_ghosts = all(part.halo.ghost_count == 0 for part in problem.partitions)
    remote_formats = (FormatId.CSR,) if no_ghosts else FORMATS

    entries: dict[Cell, float] = {}
    skipped: set[Cell] = set()
    for local_format in FORMATS:
        for remote_format in remote_formats:
            measured = np.ones(nparts, dtype=bool)
            for k, split in enumerate(splits):
                try:
                    convert_inplace(split.local, local_format, fill_limit)
                    convert_inplace(split.remote, remote_format, fill_limit)
                except DynSparseError:
                    skipped.add((k, local_format, remote_format))
                    measured[k] = False
                    convert_inplace(split.local, FormatId.CSR)
                    convert_inplace(split.remote, FormatId.CSR)

            xs = [DenseVector.ones(local_n + part.halo.ghost_count)
                  for part in problem.partitions]
            ys = [DenseVector.zeros(local_n) for _ in range(nparts)]
            distributed_spmv(backend, problem, splits, xs, ys)  # warm-up, untimed
            samples = np.empty((reps, nparts))
            tick = [0] * nparts
            for rep in range(reps):
                distributed_spmv(backend, problem, splits, xs, ys,
                                 per_partition_ns=tick)
                samples[rep] = tick
            medians = np.median(samples, axis=0)
            for k in range(nparts):
                if measured[k]:
                    # clamp to one timer tick so table times stay positive
                    entries[(k, local_format, remote_format)] = max(medians[k], 1.0) / 1e9

            for split in splits:
                convert_inplace(split.local, FormatId.CSR)
                convert_inplace(split.remote, FormatId.CSR)

    if no_ghosts:
        for (k, lf, _), seconds in list(entries.items()):
            for remote_format in FORMATS:
                entries[(k, lf, remote_format)] = seconds
        for (k, lf, _) in list(skipped):
            for remote_format in FORMATS:
                skipped.add((k, lf, remote_format))
    return TimingTable(entries=entries, reps=reps, skipped=skipped,
                       npartitions=nparts)


def _aggregate_single_format(table: TimingTable, vary_local: bool) -> FormatId:
    """Best single format for one side, the other pinned to CSR.

    A candidate is feasible only when measured on every partition; the best
    one minimizes the maximum per-partition time (the straggler governs a
    bulk-synchronous solver). Exact ties go to the lower FormatId.
    """
    best = None
    for candidate in FORMATS:
        cells = [
            (k, candidate, FormatId.CSR) if vary_local else (k, FormatId.CSR, candidate)
            for k in range(table.npartitions)
        ]
        if not all(cell in table.entries for cell in cells):
            continue
        worst = max(table.entries[cell] for cell in cells)
        if best is None or worst < best[0]:
            best = (worst, candidate)
    if best is None:
        raise EmptySearchSpace("no format was measured on every partition")
    return best[1]


def select_plan(table: TimingTable, mode: str) -> FormatPlan:
    """Pick per-partition formats from a timing table.

    Modes: ``fixed`` pins (CSR, CSR) everywhere; ``morpheus`` varies one
    global local format with remote pinned to CSR; ``ghost`` swaps the
    roles; ``multi`` takes each partition's argmin over all measured
    combinations. Exact time ties break toward the lower FormatId (local
    first, then remote). Skipped combinations are never selected.
    """
    nparts = table.npartitions
    if mode == "fixed":
        cells = [(k, FormatId.CSR, FormatId.CSR) for k in range(nparts)]
        if not all(cell in table.entries for cell in cells):
            raise EmptySearchSpace("(CSR, CSR) was not measured on every partition")
        return FormatPlan([(FormatId.CSR, FormatId.CSR)] * nparts)
    if mode == "morpheus":
        best = _aggregate_single_format(table, vary_local=True)
        return FormatPlan([(best, FormatId.CSR)] * nparts)
    if mode == "ghost":
        best = _aggregate_single_format(table, vary_local=False)
        return FormatPlan([(FormatId.CSR, best)] * nparts)
    if mode == "multi":
        assignments = []
        for k in range(nparts):
            candidates = [
                (table.entries[(k, lf, rf)], lf, rf)
                for lf in FORMATS for rf in FORMATS
                if (k, lf, rf) in table.entries
            ]
            if not candidates:
                raise EmptySearchSpace(f"partition {k} has no measured combination")
            _, lf, rf = min(candidates)
            assignments.append((lf, rf))
        return FormatPlan(assignments)
    raise ValueError(f"unknown mode {mode!r}")


def write_timing_table(table: TimingTable, path) -> None:
    """Export as CSV (columns: partition,local_format,remote_format,median_seconds,reps).

    Skipped cells are written with an empty median field.
    """
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(TIMING_TABLE_COLUMNS)
        for k in range(table.npartitions):
            for lf in FORMATS:
                for rf in FORMATS:
                    cell = (k, lf, rf)
                    if cell in table.entries:
                        median = f"{table.entries[cell]:.9e}"
                    elif cell in table.skipped:
                        median = ""
                    else:
                        continue
                    writer.writerow([k, lf.name.lower(), rf.name.lower(),
                                     median, table.reps])


def read_timing_table(path) -> TimingTable:
    """Rebuild a TimingTable from its CSV export."""
    entries: dict[Cell, float] = {}
    skipped: set[Cell] = set()
    reps = 0
    nparts = 1
    with open(path, "r", newline="", encoding="ascii") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            cell = (int(row["partition"]),
                    FormatId[row["local_format"].upper()],
                    FormatId[row["remote_format"].upper()])
            nparts = max(nparts, cell[0] + 1)
            reps = int(row["reps"])
            if row["median_seconds"]:
                entries[cell] = float(row["median_seconds"])
            else:
                skipped.add(cell)
    return TimingTable(entries=entries, reps=reps, skipped=skipped,
                       npartitions=nparts)

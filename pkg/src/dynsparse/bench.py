"""Benchmark harness: phased SpMV timing with format switching and a CG solve.

A run walks five phases in a fixed order: problem setup, reference SpMV
timing with everything in CSR, optimization setup (apply a format plan from
the flags or from the auto-tuner), solver validation, and optimized SpMV
timing (plus an optional CG solve). The report carries the configuration
echo, the phase timings, the validation outcome, the per-partition format
assignment and the reference/optimized runtime ratio, and is emitted as JSON
or CSV. Optimized timing never runs when validation fails, and a conversion
failure produces a partial report naming the failing combination.

Exit codes: 0 on completion (including a partial report), 1 on argument
errors, 2 on validation failure.
"""

from __future__ import annotations

import argparse
import json
import csv as csv_module
import io
import os
import sys
import time
from dataclasses import dataclass, field

from .errors import DynSparseError, ValidationFailed
from .formats import DenseVector, FormatId, as_format_id
from .datamove import convert_inplace
from .kernels import ExecBackend
from .solver import DistributedOperator, cg, validate_solver
from .stencil import GridSpec, PartitionedProblem, SplitMatrix, generate_problem, \
    distributed_spmv, split_local_remote
from .tuner import FormatPlan, profile_formats, select_plan

DEFAULT_ITERS = 500
DEFAULT_REPS = 5
THREADS_ENV_VAR = "DYNSPARSE_THREADS"

CSV_RUN_COLUMNS = (
    "nx", "ny", "nz", "px", "py", "pz", "mode", "requested_local_format",
    "requested_remote_format", "backend", "threads", "iters", "reps", "tune",
    "seed", "cg_tol", "cg_max_iters", "setup_seconds",
    "reference_spmv_seconds", "validation_passed", "validation_iterations",
    "optimized_spmv_seconds", "spmv_ratio", "cg_seconds", "cg_iterations",
    "error",
)
CSV_PARTITION_COLUMNS = (
    "partition", "local_format", "remote_format", "local_nnz", "remote_nnz",
    "remote_empty",
)


@dataclass
class BenchConfig:
    """Validated CLI arguments for one benchmark run."""

    nx: int
    ny: int
    nz: int
    procs: tuple[int, int, int] = (1, 1, 1)
    mode: str = "fixed"
    local_format: FormatId = FormatId.CSR
    remote_format: FormatId = FormatId.CSR
    iters: int = DEFAULT_ITERS
    reps: int = DEFAULT_REPS
    tune: bool = False
    backend: str = "serial"
    threads: int = 1
    cg_tol: float = 1e-9
    cg_max_iters: int = 0
    output: str | None = None
    format: str = "json"
    seed: int = 0


@dataclass
class RunReport:
    """Everything one benchmark run produced, in phase order."""

    config: dict
    setup_seconds: float
    reference_spmv_seconds: float | None = None
    validation: dict | None = None
    partitions: list[dict] = field(default_factory=list)
    optimized_spmv_seconds: float | None = None
    spmv_ratio: float | None = None
    cg_seconds: float | None = None
    cg_iterations: int | None = None
    cg_converged: bool | None = None
    notes: list[str] = field(default_factory=list)
    error: dict | None = None

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "setup_seconds": self.setup_seconds,
            "reference_spmv_seconds": self.reference_spmv_seconds,
            "validation": self.validation,
            "partitions": self.partitions,
            "optimized_spmv_seconds": self.optimized_spmv_seconds,
            "spmv_ratio": self.spmv_ratio,
            "cg_seconds": self.cg_seconds,
            "cg_iterations": self.cg_iterations,
            "cg_converged": self.cg_converged,
            "notes": self.notes,
            "error": self.error,
        }


def _config_echo(config: BenchConfig) -> dict:
    return {
        "nx": config.nx, "ny": config.ny, "nz": config.nz,
        "procs": list(config.procs),
        "mode": config.mode,
        "local_format": config.local_format.name.lower(),
        "remote_format": config.remote_format.name.lower(),
        "backend": config.backend,
        "threads": config.threads,
        "iters": config.iters,
        "reps": config.reps,
        "tune": config.tune,
        "cg_tol": config.cg_tol,
        "cg_max_iters": config.cg_max_iters,
        "seed": config.seed,
    }


def _make_backend(config: BenchConfig) -> ExecBackend:
    if config.backend == "threaded":
        return ExecBackend.threaded(config.threads)
    return ExecBackend.serial()


def _time_spmv_loop(backend: ExecBackend, problem: PartitionedProblem,
                    splits: list[SplitMatrix], iters: int) -> float:
    """Accumulated wall time of ``iters`` kernel+exchange passes.

    Input vectors are re-initialized to all ones so reference and optimized
    phases time identical work.
    """
    local_n = problem.spec.local_points
    xs = [DenseVector.ones(local_n + part.halo.ghost_count)
          for part in problem.partitions]
    ys = [DenseVector.zeros(local_n) for _ in problem.partitions]
    distributed_spmv(backend, problem, splits, xs, ys)  # warm-up, untimed
    total_ns = 0
    for _ in range(iters):
        t0 = time.perf_counter_ns()
        distributed_spmv(backend, problem, splits, xs, ys)
        total_ns += time.perf_counter_ns() - t0
    return total_ns / 1e9


def _partition_summaries(splits: list[SplitMatrix],
                         plan: FormatPlan | None) -> list[dict]:
    rows = []
    for k, split in enumerate(splits):
        if plan is not None:
            local_format, remote_format = plan.assignments[k]
        else:
            local_format, remote_format = split.local.active, split.remote.active
        rows.append({
            "partition": k,
            "local_format": local_format.name.lower(),
            "remote_format": remote_format.name.lower(),
            "local_nnz": split.local.nnz,
            "remote_nnz": split.remote.nnz,
            "remote_empty": split.remote.nnz == 0,
        })
    return rows


def run_benchmark(config: BenchConfig) -> RunReport:
    """Execute the five benchmark phases and assemble the report."""
    backend = _make_backend(config)
    spec = GridSpec(config.nx, config.ny, config.nz, *config.procs)

    t0 = time.perf_counter_ns()
    problem = generate_problem(spec)
    splits = [split_local_remote(problem, k) for k in range(problem.npartitions)]
    setup_seconds = (time.perf_counter_ns() - t0) / 1e9
    report = RunReport(config=_config_echo(config), setup_seconds=setup_seconds)
    if all(part.halo.ghost_count == 0 for part in problem.partitions):
        report.notes.append("remote part is empty on every partition")

    # phase 2: reference timing, every part CSR as split_local_remote left it
    report.reference_spmv_seconds = _time_spmv_loop(backend, problem, splits,
                                                    config.iters)

    # phase 3: optimization setup
    plan = None
    partition = None
    try:
        if config.tune:
            table = profile_formats(backend, problem, splits, config.reps)
            plan = select_plan(table, config.mode)
        else:
            plan = FormatPlan([(config.local_format, config.remote_format)]
                              * problem.npartitions)
        for partition, (local_format, remote_format) in enumerate(plan.assignments):
            convert_inplace(splits[partition].local, local_format)
            convert_inplace(splits[partition].remote, remote_format)
    except DynSparseError as exc:
        failing = (plan.assignments[partition]
                   if plan is not None and partition is not None else None)
        report.error = {
            "phase": "optimization_setup",
            "partition": partition if failing is not None else None,
            "local_format": failing[0].name.lower() if failing else None,
            "remote_format": failing[1].name.lower() if failing else None,
            "message": str(exc),
        }
        report.partitions = _partition_summaries(splits, None)
        return report
    report.partitions = _partition_summaries(splits, plan)

    # phase 4: validation; optimized timing is gated on it passing
    try:
        vres = validate_solver(backend, problem, splits)
    except ValidationFailed as exc:
        vres = exc.report
    report.validation = {
        "passed": vres.passed,
        "converged": vres.converged,
        "iterations": vres.iterations,
        "iteration_bound": vres.iteration_bound,
        "final_residual": vres.final_residual,
    }
    if not vres.passed:
        return report

    # phase 5: optimized timing, same iteration count and input vectors
    report.optimized_spmv_seconds = _time_spmv_loop(backend, problem, splits,
                                                    config.iters)
    if report.optimized_spmv_seconds > 0:
        report.spmv_ratio = (report.reference_spmv_seconds
                             / report.optimized_spmv_seconds)
    if config.cg_max_iters > 0:
        t0 = time.perf_counter_ns()
        result = cg(backend, DistributedOperator(problem, splits),
                    [part.b for part in problem.partitions],
                    tol=config.cg_tol, max_iters=config.cg_max_iters)
        report.cg_seconds = (time.perf_counter_ns() - t0) / 1e9
        report.cg_iterations = result.iterations
        report.cg_converged = result.converged
    return report


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------

def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _report_csv_rows(report: RunReport) -> list[list[str]]:
    d = report.to_dict()
    cfg = d["config"]
    validation = d["validation"] or {}
    run_values = {
        "nx": cfg["nx"], "ny": cfg["ny"], "nz": cfg["nz"],
        "px": cfg["procs"][0], "py": cfg["procs"][1], "pz": cfg["procs"][2],
        "mode": cfg["mode"],
        "requested_local_format": cfg["local_format"],
        "requested_remote_format": cfg["remote_format"],
        "backend": cfg["backend"], "threads": cfg["threads"],
        "iters": cfg["iters"], "reps": cfg["reps"], "tune": cfg["tune"],
        "seed": cfg["seed"], "cg_tol": cfg["cg_tol"],
        "cg_max_iters": cfg["cg_max_iters"],
        "setup_seconds": d["setup_seconds"],
        "reference_spmv_seconds": d["reference_spmv_seconds"],
        "validation_passed": validation.get("passed"),
        "validation_iterations": validation.get("iterations"),
        "optimized_spmv_seconds": d["optimized_spmv_seconds"],
        "spmv_ratio": d["spmv_ratio"],
        "cg_seconds": d["cg_seconds"],
        "cg_iterations": d["cg_iterations"],
        "error": d["error"]["message"] if d["error"] else None,
    }
    shared = [_csv_cell(run_values[name]) for name in CSV_RUN_COLUMNS]
    rows = []
    for part in d["partitions"]:
        rows.append(shared + [_csv_cell(part[name])
                              for name in CSV_PARTITION_COLUMNS])
    return rows


def emit_report(report: RunReport, format: str = "json", path=None) -> None:
    """Write the report as a single JSON object or one CSV row per partition.

    ``path`` of None writes to standard output.
    """
    if format == "json":
        text = json.dumps(report.to_dict(), indent=2) + "\n"
    elif format == "csv":
        buffer = io.StringIO()
        writer = csv_module.writer(buffer)
        writer.writerow(CSV_RUN_COLUMNS + CSV_PARTITION_COLUMNS)
        writer.writerows(_report_csv_rows(report))
        text = buffer.getvalue()
    else:
        raise ValueError(f"unknown report format {format!r}")
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad arguments; this harness uses 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _procs(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected PX,PY,PZ")
    values = tuple(int(p) for p in parts)
    if any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("partition counts must be >= 1")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="dynsparse-bench",
        description="Phased SpMV/CG benchmark over runtime-switchable sparse formats.",
    )
    parser.add_argument("--nx", type=_positive_int, required=True,
                        help="grid points per partition in x")
    parser.add_argument("--ny", type=_positive_int, required=True,
                        help="grid points per partition in y")
    parser.add_argument("--nz", type=_positive_int, required=True,
                        help="grid points per partition in z")
    parser.add_argument("--procs", type=_procs, default=(1, 1, 1),
                        metavar="PX,PY,PZ", help="partition grid (default 1,1,1)")
    parser.add_argument("--mode", choices=("fixed", "morpheus", "ghost", "multi"),
                        default="fixed",
                        help="tuner selection mode, applied with --tune")
    parser.add_argument("--local-format", choices=("coo", "csr", "dia"),
                        default="csr", help="local-part format when not tuning")
    parser.add_argument("--remote-format", choices=("coo", "csr", "dia"),
                        default="csr", help="remote-part format when not tuning")
    parser.add_argument("--iters", type=_positive_int, default=DEFAULT_ITERS,
                        help=f"timed SpMV calls per phase (default {DEFAULT_ITERS})")
    parser.add_argument("--reps", type=_positive_int, default=DEFAULT_REPS,
                        help=f"tuner samples per combination (default {DEFAULT_REPS})")
    parser.add_argument("--tune", action="store_true",
                        help="run the profiler and select formats per --mode")
    parser.add_argument("--backend", choices=("serial", "threaded"),
                        default="serial", help="kernel execution backend")
    parser.add_argument("--threads", type=_positive_int, default=None,
                        help=f"worker threads (falls back to ${THREADS_ENV_VAR}, then 1)")
    parser.add_argument("--cg-tol", type=float, default=1e-9,
                        help="CG relative residual tolerance (default 1e-9)")
    parser.add_argument("--cg-max-iters", type=int, default=0,
                        help="CG iteration cap; 0 skips the CG solve (default 0)")
    parser.add_argument("--output", default=None,
                        help="report path (default: standard output)")
    parser.add_argument("--format", choices=("json", "csv"), default="json",
                        help="report format")
    parser.add_argument("--seed", type=int, default=0,
                        help="recorded in the report; reserved for randomized inputs")
    return parser


def config_from_args(args: argparse.Namespace) -> BenchConfig:
    threads = args.threads
    if threads is None:
        try:
            threads = max(1, int(os.environ.get(THREADS_ENV_VAR, "1")))
        except ValueError:
            threads = 1
    return BenchConfig(
        nx=args.nx, ny=args.ny, nz=args.nz, procs=args.procs, mode=args.mode,
        local_format=as_format_id(args.local_format),
        remote_format=as_format_id(args.remote_format),
        iters=args.iters, reps=args.reps, tune=args.tune,
        backend=args.backend, threads=threads, cg_tol=args.cg_tol,
        cg_max_iters=args.cg_max_iters, output=args.output,
        format=args.format, seed=args.seed,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.cg_tol <= 0:
        parser.error("--cg-tol must be positive")
    if args.cg_max_iters < 0:
        parser.error("--cg-max-iters must be >= 0")
    config = config_from_args(args)
    report = run_benchmark(config)
    emit_report(report, config.format, config.output)
    if report.validation is not None and not report.validation["passed"]:
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Unpreconditioned conjugate gradient over concrete, dynamic or split systems.

The recurrence is built entirely from this package's kernels (spmv, dot,
waxpby), so a run exercises whichever storage format is active. Distributed
systems take per-partition vectors; global dot products sum the partition
dots over owned entries only and every matrix application goes through the
halo exchange.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BreakdownZeroCurvature, DimensionMismatch, ValidationFailed
from .formats import DenseVector, DynamicMatrix
from .kernels import ExecBackend, dot, extract_diagonal, spmv, update_diagonal, waxpby
from .stencil import PartitionedProblem, SplitMatrix, distributed_spmv


@dataclass
class CgResult:
    """Solution, iteration count and relative residual history of one solve.

    ``residual_history`` has iterations + 1 entries; entry 0 is the initial
    relative residual.
    """

    x: DenseVector | list[DenseVector]
    iterations: int
    residual_history: np.ndarray
    converged: bool


@dataclass
class DistributedOperator:
    """Bundles a partitioned problem with its split matrices for cg()."""

    problem: PartitionedProblem
    splits: list[SplitMatrix]


@dataclass
class ValidationReport:
    """Outcome of the diagonal-modification solver check."""

    passed: bool
    converged: bool
    iterations: int
    iteration_bound: int
    final_residual: float


def cg(backend: ExecBackend, a, b, x0=None, tol: float = 1e-9,
       max_iters: int = 500) -> CgResult:
    """Conjugate gradient for SPD systems.

    ``a`` is a concrete container, a DynamicMatrix, or a DistributedOperator
    (in which case ``b`` and ``x0`` are per-partition vectors over owned
    entries). Iteration stops when ||r_k|| / ||b|| <= tol or after max_iters.
    Raises BreakdownZeroCurvature when p'Ap <= 0, which signals a non-SPD
    operator.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if isinstance(a, DistributedOperator):
        return _cg_distributed(backend, a, b, x0, tol, max_iters)
    return _cg_single(backend, a, b, x0, tol, max_iters)


def _cg_single(backend, a, b, x0, tol, max_iters):
    mat = a.payload if isinstance(a, DynamicMatrix) else a
    if mat.nrows != mat.ncols:
        raise DimensionMismatch(f"cg needs a square matrix, got {mat.nrows}x{mat.ncols}")
    n = mat.nrows
    if b.length != n:
        raise DimensionMismatch(f"b length {b.length} != {n}")
    if x0 is not None and x0.length != n:
        raise DimensionMismatch(f"x0 length {x0.length} != {n}")

    x = DenseVector(np.array(x0.data, copy=True)) if x0 is not None else DenseVector.zeros(n)
    r = DenseVector.zeros(n)
    p = DenseVector.zeros(n)
    ap = DenseVector.zeros(n)

    spmv(backend, a, x, ap)
    waxpby(backend, 1.0, b, -1.0, ap, r)

    norm_b = math.sqrt(dot(backend, b, b))
    scale = norm_b if norm_b > 0.0 else 1.0
    rr = dot(backend, r, r)
    history = [math.sqrt(rr) / scale]
    if history[0] <= tol:
        return CgResult(x, 0, np.asarray(history), True)

    waxpby(backend, 1.0, r, 0.0, r, p)
    iterations = 0
    converged = False
    for k in range(1, max_iters + 1):
        iterations = k
        spmv(backend, a, p, ap)
        pap = dot(backend, p, ap)
        if pap <= 0.0:
            raise BreakdownZeroCurvature(f"p'Ap = {pap} at iteration {k}")
        alpha = rr / pap
        waxpby(backend, 1.0, x, alpha, p, x)
        waxpby(backend, 1.0, r, -alpha, ap, r)
        rr_next = dot(backend, r, r)
        history.append(math.sqrt(rr_next) / scale)
        if history[-1] <= tol:
            converged = True
            break
        waxpby(backend, 1.0, r, rr_next / rr, p, p)
        rr = rr_next
    return CgResult(x, iterations, np.asarray(history), converged)


def _cg_distributed(backend, op, b, x0, tol, max_iters):
    problem = op.problem
    splits = op.splits
    nparts = problem.npartitions
    local_n = problem.spec.local_points
    if len(b) != nparts:
        raise DimensionMismatch(f"expected {nparts} right-hand sides, got {len(b)}")
    for vec in b:
        if vec.length != local_n:
            raise DimensionMismatch(f"b length {vec.length} != local size {local_n}")
    if x0 is not None:
        if len(x0) != nparts:
            raise DimensionMismatch(f"expected {nparts} initial guesses, got {len(x0)}")
        for vec in x0:
            if vec.length != local_n:
                raise DimensionMismatch(f"x0 length {vec.length} != local size {local_n}")

    def owned_zeros():
        return [DenseVector.zeros(local_n) for _ in range(nparts)]

    def global_dot(u, v):
        return sum(dot(backend, u[k], v[k]) for k in range(nparts))

    x = ([DenseVector(np.array(v.data, copy=True)) for v in x0]
         if x0 is not None else owned_zeros())
    # the search direction carries ghost slots; its owned prefix is shared
    # with the view list so waxpby updates feed straight into the exchange
    p_full = [DenseVector.zeros(local_n + part.halo.ghost_count)
              for part in problem.partitions]
    p = [DenseVector(pf.data[:local_n]) for pf in p_full]
    r = owned_zeros()
    ap = owned_zeros()

    for k in range(nparts):
        p[k].data[:] = x[k].data
    distributed_spmv(backend, problem, splits, p_full, ap)
    for k in range(nparts):
        waxpby(backend, 1.0, b[k], -1.0, ap[k], r[k])

    norm_b = math.sqrt(global_dot(b, b))
    scale = norm_b if norm_b > 0.0 else 1.0
    rr = global_dot(r, r)
    history = [math.sqrt(rr) / scale]
    if history[0] <= tol:
        return CgResult(x, 0, np.asarray(history), True)

    for k in range(nparts):
        waxpby(backend, 1.0, r[k], 0.0, r[k], p[k])
    iterations = 0
    converged = False
    for it in range(1, max_iters + 1):
        iterations = it
        distributed_spmv(backend, problem, splits, p_full, ap)
        pap = global_dot(p, ap)
        if pap <= 0.0:
            raise BreakdownZeroCurvature(f"p'Ap = {pap} at iteration {it}")
        alpha = rr / pap
        for k in range(nparts):
            waxpby(backend, 1.0, x[k], alpha, p[k], x[k])
            waxpby(backend, 1.0, r[k], -alpha, ap[k], r[k])
        rr_next = global_dot(r, r)
        history.append(math.sqrt(rr_next) / scale)
        if history[-1] <= tol:
            converged = True
            break
        beta = rr_next / rr
        for k in range(nparts):
            waxpby(backend, 1.0, r[k], beta, p[k], p[k])
        rr = rr_next
    return CgResult(x, iterations, np.asarray(history), converged)


def validate_solver(backend: ExecBackend, problem: PartitionedProblem,
                    splits: list[SplitMatrix], diag_value: float = 1.0e6,
                    tol: float = 1e-12, max_iters: int = 50,
                    iteration_bound: int = 12) -> ValidationReport:
    """Diagonal-modification solver check.

    Saves each partition's diagonal, overwrites it with ``diag_value``
    (1.0e6 turns the system near-identity after scaling), rebuilds the
    right-hand side as A times all-ones, and requires cg to reach ``tol``
    within ``iteration_bound`` iterations. The original diagonal is restored
    exactly afterwards, pass or fail; the problem's stored b is never
    touched. Raises ValidationFailed (with the report attached) on failure.
    """
    local_n = problem.spec.local_points
    saved = [extract_diagonal(split.local) for split in splits]
    new_diag = DenseVector(np.full(local_n, diag_value))
    try:
        for split in splits:
            update_diagonal(split.local, new_diag)
        ones_full = [DenseVector.ones(local_n + part.halo.ghost_count)
                     for part in problem.partitions]
        b = [DenseVector.zeros(local_n) for _ in range(problem.npartitions)]
        distributed_spmv(backend, problem, splits, ones_full, b)
        result = cg(backend, DistributedOperator(problem, splits), b,
                    tol=tol, max_iters=max_iters)
    finally:
        for split, diag in zip(splits, saved):
            update_diagonal(split.local, diag)
    passed = result.converged and result.iterations <= iteration_bound
    report = ValidationReport(
        passed=passed,
        converged=result.converged,
        iterations=result.iterations,
        iteration_bound=iteration_bound,
        final_residual=float(result.residual_history[-1]),
    )
    if not passed:
        raise ValidationFailed(
            f"validation cg took {result.iterations} iterations "
            f"(bound {iteration_bound}), converged={result.converged}",
            report=report,
        )
    return report

"""Format-specific computational kernels behind a uniform dispatch surface.

Each sparse format has its own SpMV and diagonal routines; a dispatch table
built at import time maps every format to its kernel, so a DynamicMatrix pays
one dictionary lookup to reach exactly the code a concrete container would
run.

Determinism contract for the threaded backend:

* CSR and DIA partition rows into contiguous chunks. Each row's partial sums
  are reduced in a fixed per-row order that does not depend on the chunk
  boundaries, so results are bitwise independent of the thread count.
* COO accumulates per-thread partial vectors over entry chunks and merges
  them in chunk order; reassociation keeps results within 1e-13 relative of
  the serial path rather than bitwise equal.
* Reductions (dot, reduce, scan) use one fixed sequential order on every
  backend, which keeps scan's last element exactly equal to reduce's result.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, StructurallyAbsentDiagonal
from .formats import (
    CooMatrix,
    CsrMatrix,
    DenseVector,
    DiaMatrix,
    DynamicMatrix,
    FormatId,
)


@dataclass(frozen=True)
class ExecBackend:
    """Where kernel loops execute: serial, or a pool of worker threads."""

    kind: str = "serial"
    nthreads: int = 1

    def __post_init__(self):
        if self.kind not in ("serial", "threaded"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.nthreads < 1:
            raise ValueError(f"nthreads must be >= 1, got {self.nthreads}")

    @staticmethod
    def serial() -> "ExecBackend":
        return ExecBackend("serial", 1)

    @staticmethod
    def threaded(nthreads: int) -> "ExecBackend":
        return ExecBackend("threaded", nthreads)


SERIAL = ExecBackend.serial()

_POOLS: dict[int, ThreadPoolExecutor] = {}


def _pool(nthreads: int) -> ThreadPoolExecutor:
    pool = _POOLS.get(nthreads)
    if pool is None:
        pool = ThreadPoolExecutor(max_workers=nthreads,
                                  thread_name_prefix="dynsparse")
        _POOLS[nthreads] = pool
    return pool


def _chunk_bounds(n: int, pieces: int) -> np.ndarray:
    return np.linspace(0, n, min(max(pieces, 1), max(n, 1)) + 1, dtype=np.int64)


def _run_chunked(backend: ExecBackend, n: int, body) -> None:
    """Run body(lo, hi) over [0, n), split by the backend's thread count."""
    if backend.kind != "threaded" or backend.nthreads == 1 or n == 0:
        body(0, n)
        return
    bounds = _chunk_bounds(n, backend.nthreads)
    ranges = [(int(bounds[i]), int(bounds[i + 1]))
              for i in range(bounds.size - 1) if bounds[i] < bounds[i + 1]]
    if len(ranges) == 1:
        body(0, n)
        return
    futures = [_pool(backend.nthreads).submit(body, lo, hi) for lo, hi in ranges]
    for fut in futures:
        fut.result()


def _resolve(a):
    return a.payload if isinstance(a, DynamicMatrix) else a


# ---------------------------------------------------------------------------
# SpMV kernels
# ---------------------------------------------------------------------------

def _csr_spmv(backend: ExecBackend, a: CsrMatrix, x: np.ndarray, y: np.ndarray) -> None:
    offs = a.row_offsets
    cols = a.col_indices
    vals = a.values

    def rows(r0: int, r1: int) -> None:
        lo = int(offs[r0])
        hi = int(offs[r1])
        out = y[r0:r1]
        out[:] = 0.0
        if lo == hi:
            return
        prod = vals[lo:hi] * x[cols[lo:hi]]
        nonempty = offs[r0:r1] < offs[r0 + 1:r1 + 1]
        starts = (offs[r0:r1] - lo)[nonempty]
        out[nonempty] = np.add.reduceat(prod, starts)

    _run_chunked(backend, a.nrows, rows)


def _dia_spmv(backend: ExecBackend, a: DiaMatrix, x: np.ndarray, y: np.ndarray) -> None:
    offsets = a.offsets
    table = a.values
    nrows = a.nrows
    ncols = a.ncols

    def rows(r0: int, r1: int) -> None:
        y[r0:r1] = 0.0
        # diagonals outer, rows inner; out-of-range slots are skipped by the
        # index arithmetic rather than by testing padding values
        for j in range(offsets.size):
            d = int(offsets[j])
            i0 = max(r0, -d, 0)
            i1 = min(r1, nrows, ncols - d)
            if i1 <= i0:
                continue
            y[i0:i1] += table[i0:i1, j] * x[i0 + d:i1 + d]

    _run_chunked(backend, nrows, rows)


def _coo_spmv(backend: ExecBackend, a: CooMatrix, x: np.ndarray, y: np.ndarray) -> None:
    rows = a.row_indices
    cols = a.col_indices
    vals = a.values
    nrows = a.nrows
    if backend.kind != "threaded" or backend.nthreads == 1 or rows.size == 0:
        y[:] = np.bincount(rows, weights=vals * x[cols], minlength=nrows)
        return
    bounds = _chunk_bounds(rows.size, backend.nthreads)
    spans = [(int(bounds[i]), int(bounds[i + 1]))
             for i in range(bounds.size - 1) if bounds[i] < bounds[i + 1]]

    def partial(span):
        lo, hi = span
        return np.bincount(rows[lo:hi], weights=vals[lo:hi] * x[cols[lo:hi]],
                           minlength=nrows)

    futures = [_pool(backend.nthreads).submit(partial, s) for s in spans]
    y[:] = 0.0
    for fut in futures:  # merged in chunk order: deterministic per thread count
        y += fut.result()


_SPMV_KERNELS = {
    FormatId.COO: _coo_spmv,
    FormatId.CSR: _csr_spmv,
    FormatId.DIA: _dia_spmv,
}


def spmv(backend: ExecBackend, a, x: DenseVector, y: DenseVector) -> None:
    """y = A @ x, overwriting y.

    ``a`` may be a concrete sparse container or a DynamicMatrix; the dynamic
    case dispatches to the active variant's kernel through a table built at
    import time, so it runs byte-for-byte the same code as the concrete
    container would.
    """
    mat = _resolve(a)
    if x.length != mat.ncols:
        raise DimensionMismatch(f"x length {x.length} != ncols {mat.ncols}")
    if y.length != mat.nrows:
        raise DimensionMismatch(f"y length {y.length} != nrows {mat.nrows}")
    _SPMV_KERNELS[mat.format_id](backend, mat, x.data, y.data)


def spmv_add(backend: ExecBackend, a, x: DenseVector, y: DenseVector) -> None:
    """y += A @ x; the accumulate variant used for remote matrix parts."""
    mat = _resolve(a)
    if x.length != mat.ncols:
        raise DimensionMismatch(f"x length {x.length} != ncols {mat.ncols}")
    if y.length != mat.nrows:
        raise DimensionMismatch(f"y length {y.length} != nrows {mat.nrows}")
    tmp = np.zeros(mat.nrows)
    _SPMV_KERNELS[mat.format_id](backend, mat, x.data, tmp)
    y.data += tmp


# ---------------------------------------------------------------------------
# dense vector kernels
# ---------------------------------------------------------------------------

def dot(backend: ExecBackend, x: DenseVector, y: DenseVector) -> float:
    """Sum of x[i] * y[i]; zero for empty vectors."""
    if x.length != y.length:
        raise DimensionMismatch(f"lengths differ: {x.length} vs {y.length}")
    return float(np.dot(x.data, y.data))


def waxpby(backend: ExecBackend, alpha: float, x: DenseVector,
           beta: float, y: DenseVector, w: DenseVector) -> None:
    """w[i] = alpha * x[i] + beta * y[i]; w may alias x or y."""
    if not (x.length == y.length == w.length):
        raise DimensionMismatch(
            f"lengths differ: x={x.length} y={y.length} w={w.length}"
        )
    w.data[:] = alpha * x.data + beta * y.data


def reduce(backend: ExecBackend, x: DenseVector) -> float:
    """Sum of all elements; zero for an empty vector.

    Shares the sequential prefix-sum order with :func:`scan`, so
    ``scan(x)[-1] == reduce(x)`` holds exactly.
    """
    if x.length == 0:
        return 0.0
    return float(np.cumsum(x.data)[-1])


def scan(backend: ExecBackend, x: DenseVector) -> DenseVector:
    """Inclusive prefix sums: out[i] = sum of x[0..i]."""
    return DenseVector(np.cumsum(x.data))


# ---------------------------------------------------------------------------
# diagonal extraction / update
# ---------------------------------------------------------------------------

def _diag_length(m) -> int:
    return min(m.nrows, m.ncols)


def _coo_extract(a: CooMatrix) -> np.ndarray:
    n = _diag_length(a)
    hit = a.row_indices == a.col_indices
    return np.bincount(a.row_indices[hit], weights=a.values[hit], minlength=n)[:n]


def _csr_extract(a: CsrMatrix) -> np.ndarray:
    n = _diag_length(a)
    out = np.zeros(n)
    rows = np.repeat(np.arange(a.nrows, dtype=np.int64), np.diff(a.row_offsets))
    hit = rows == a.col_indices
    out[rows[hit]] = a.values[hit]
    return out


def _dia_extract(a: DiaMatrix) -> np.ndarray:
    n = _diag_length(a)
    j = np.flatnonzero(a.offsets == 0)
    if j.size == 0:
        return np.zeros(n)
    return a.values[:n, int(j[0])].copy()


_EXTRACT_KERNELS = {
    FormatId.COO: _coo_extract,
    FormatId.CSR: _csr_extract,
    FormatId.DIA: _dia_extract,
}


def extract_diagonal(a) -> DenseVector:
    """The main diagonal as a fresh vector of length min(nrows, ncols).

    Structurally absent positions read as 0.0.
    """
    mat = _resolve(a)
    return DenseVector(_EXTRACT_KERNELS[mat.format_id](mat))


def _coo_update(a: CooMatrix, d: np.ndarray) -> None:
    n = d.size
    pos = np.flatnonzero(a.row_indices == a.col_indices)
    hit_rows = a.row_indices[pos]
    covered = np.zeros(n, dtype=bool)
    covered[hit_rows] = True
    if not covered.all():
        raise StructurallyAbsentDiagonal(int(np.flatnonzero(~covered)[0]))
    # duplicates: the first stored occurrence carries the value, the rest 0.0
    a.values[pos] = 0.0
    uniq, first = np.unique(hit_rows, return_index=True)
    a.values[pos[first]] = d[uniq]


def _csr_update(a: CsrMatrix, d: np.ndarray) -> None:
    n = d.size
    rows = np.repeat(np.arange(a.nrows, dtype=np.int64), np.diff(a.row_offsets))
    hit = rows == a.col_indices
    hit_rows = rows[hit]
    covered = np.zeros(n, dtype=bool)
    covered[hit_rows] = True
    if not covered.all():
        raise StructurallyAbsentDiagonal(int(np.flatnonzero(~covered)[0]))
    a.values[np.flatnonzero(hit)] = d[hit_rows]


def _dia_update(a: DiaMatrix, d: np.ndarray) -> None:
    j = np.flatnonzero(a.offsets == 0)
    if j.size == 0:
        raise StructurallyAbsentDiagonal(0)
    a.values[:d.size, int(j[0])] = d


_UPDATE_KERNELS = {
    FormatId.COO: _coo_update,
    FormatId.CSR: _csr_update,
    FormatId.DIA: _dia_update,
}


def update_diagonal(a, d: DenseVector) -> None:
    """Overwrite the main diagonal with d, leaving the sparsity unchanged.

    Every position (i, i) for i < min(nrows, ncols) must be structurally
    present; otherwise StructurallyAbsentDiagonal names the first missing row.
    """
    mat = _resolve(a)
    n = _diag_length(mat)
    if d.length != n:
        raise DimensionMismatch(f"diagonal length {d.length} != min(dims) = {n}")
    if n == 0:
        return
    _UPDATE_KERNELS[mat.format_id](mat, d.data)

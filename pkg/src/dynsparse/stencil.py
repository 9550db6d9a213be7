"""Synthetic 27-point stencil problem with in-process domain decomposition.

The generator builds the linear system of a Poisson-style discretization on a
regular 3-D grid: every grid point couples to itself (coefficient 26.0) and
to each existing neighbor within Chebyshev distance one (coefficient -1.0).
The exact solution is the all-ones vector and the right-hand side is built as
A times that vector, so each b[i] equals the row sum.

Partitions are simulated inside one process. The global grid is cut into
px x py x pz equal blocks; each partition owns nx*ny*nz points and numbers
them locally with x fastest. Columns that reference points owned elsewhere
are remapped to ghost slots appended after the owned range, numbered by
(owner rank, owner-local index) ascending so both sides of an exchange agree
on the order. "Halo exchange" is then a gather over the shared plan, with all
reads hitting owned entries only.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .formats import CsrMatrix, DenseVector, DynamicMatrix
from .kernels import ExecBackend, spmv, spmv_add

STENCIL_DIAG = 26.0
STENCIL_OFF_DIAG = -1.0


@dataclass(frozen=True)
class GridSpec:
    """Per-partition grid extents and the partition grid itself.

    The global grid is (nx*px) x (ny*py) x (nz*pz); every partition owns
    exactly nx*ny*nz points.
    """

    nx: int
    ny: int
    nz: int
    px: int = 1
    py: int = 1
    pz: int = 1

    def __post_init__(self):
        for name in ("nx", "ny", "nz", "px", "py", "pz"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")

    @property
    def local_points(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def npartitions(self) -> int:
        return self.px * self.py * self.pz

    @property
    def global_dims(self) -> tuple[int, int, int]:
        return (self.nx * self.px, self.ny * self.py, self.nz * self.pz)

    @property
    def global_points(self) -> int:
        gx, gy, gz = self.global_dims
        return gx * gy * gz


@dataclass
class HaloExchange:
    """One neighbor's contribution to a partition's ghost region.

    ``send_local_indices`` index into the neighbor's owned vector and
    ``recv_ghost_slots`` into this partition's extended vector; the two are
    equal-length and index-aligned.
    """

    neighbor: int
    send_local_indices: np.ndarray
    recv_ghost_slots: np.ndarray


@dataclass
class HaloPlan:
    """Ghost bookkeeping for one partition.

    Ghost slots are densely numbered local_n .. local_n + ghost_count - 1.
    """

    ghost_count: int
    exchanges: list[HaloExchange] = field(default_factory=list)


@dataclass
class PartitionData:
    """Everything one partition holds: matrix, vectors, plan, index maps."""

    rank: int
    coords: tuple[int, int, int]
    a_full: CsrMatrix
    b: DenseVector
    xexact: DenseVector
    halo: HaloPlan
    local_to_global: np.ndarray
    ghost_to_global: np.ndarray


@dataclass
class PartitionedProblem:
    """The per-partition systems of one generated stencil problem."""

    spec: GridSpec
    partitions: list[PartitionData]

    @property
    def npartitions(self) -> int:
        return len(self.partitions)


@dataclass
class SplitMatrix:
    """A partition's system matrix cut into local and remote parts.

    ``local`` is square over the owned columns; ``remote`` is rectangular
    over the ghost columns (re-indexed to start at zero). Their entry sets
    partition the full matrix's entries.
    """

    local: DynamicMatrix
    remote: DynamicMatrix


_NEIGHBOR_OFFSETS = [
    (dx, dy, dz)
    for dz in (-1, 0, 1)
    for dy in (-1, 0, 1)
    for dx in (-1, 0, 1)
]


def generate_problem(spec: GridSpec) -> PartitionedProblem:
    """Assemble the stencil system for every partition of the grid.

    Each owned row gets a 26.0 diagonal plus -1.0 for every in-bounds grid
    neighbor; b is the matrix applied to the all-ones exact solution. Rows
    follow 3-D block ownership and off-partition columns are remapped to
    ghost slots past the owned range.
    """
    nx, ny, nz = spec.nx, spec.ny, spec.nz
    px, py, pz = spec.px, spec.py, spec.pz
    gnx, gny, gnz = spec.global_dims
    n = spec.local_points

    local = np.arange(n, dtype=np.int64)
    lx = local % nx
    ly = (local // nx) % ny
    lz = local // (nx * ny)

    partitions = []
    for rank in range(spec.npartitions):
        cx = rank % px
        cy = (rank // px) % py
        cz = rank // (px * py)
        gx = lx + cx * nx
        gy = ly + cy * ny
        gz = lz + cz * nz

        rows_parts, owner_parts, olocal_parts, vals_parts = [], [], [], []
        for dx, dy, dz in _NEIGHBOR_OFFSETS:
            tx = gx + dx
            ty = gy + dy
            tz = gz + dz
            valid = ((tx >= 0) & (tx < gnx) & (ty >= 0) & (ty < gny)
                     & (tz >= 0) & (tz < gnz))
            if not valid.any():
                continue
            ntx = tx[valid]
            nty = ty[valid]
            ntz = tz[valid]
            ocx = ntx // nx
            ocy = nty // ny
            ocz = ntz // nz
            rows_parts.append(local[valid])
            owner_parts.append(ocx + px * (ocy + py * ocz))
            olocal_parts.append(
                (ntx - ocx * nx) + nx * ((nty - ocy * ny) + ny * (ntz - ocz * nz))
            )
            coeff = STENCIL_DIAG if (dx == 0 and dy == 0 and dz == 0) else STENCIL_OFF_DIAG
            vals_parts.append(np.full(int(valid.sum()), coeff))

        rows = np.concatenate(rows_parts)
        owners = np.concatenate(owner_parts)
        olocals = np.concatenate(olocal_parts)
        vals = np.concatenate(vals_parts)

        external = owners != rank
        # ghosts sorted by (owner rank, owner-local index); owner_local < n on
        # every partition, so a single integer key orders both at once
        ghost_keys = np.unique(owners[external] * n + olocals[external])
        ghost_count = int(ghost_keys.size)

        cols = np.empty(rows.size, dtype=np.int64)
        cols[~external] = olocals[~external]
        if ghost_count:
            cols[external] = n + np.searchsorted(
                ghost_keys, owners[external] * n + olocals[external]
            )

        order = np.lexsort((cols, rows))
        rows = rows[order]
        cols = cols[order]
        vals = vals[order]

        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=offsets[1:])
        a_full = CsrMatrix(n, n + ghost_count, offsets, cols, vals)
        b = DenseVector(np.bincount(rows, weights=vals, minlength=n))

        ghost_owner = ghost_keys // n
        ghost_local = ghost_keys % n
        exchanges = []
        for q in np.unique(ghost_owner):
            sel = np.flatnonzero(ghost_owner == q)
            exchanges.append(HaloExchange(
                neighbor=int(q),
                send_local_indices=ghost_local[sel].copy(),
                recv_ghost_slots=n + sel,
            ))

        local_to_global = gx + gnx * (gy.astype(np.int64) + gny * gz.astype(np.int64))
        oxl = ghost_local % nx
        oyl = (ghost_local // nx) % ny
        ozl = ghost_local // (nx * ny)
        ocx = ghost_owner % px
        ocy = (ghost_owner // px) % py
        ocz = ghost_owner // (px * py)
        ghost_to_global = ((oxl + ocx * nx)
                           + gnx * ((oyl + ocy * ny) + gny * (ozl + ocz * nz)))

        partitions.append(PartitionData(
            rank=rank,
            coords=(cx, cy, cz),
            a_full=a_full,
            b=b,
            xexact=DenseVector.ones(n),
            halo=HaloPlan(ghost_count=ghost_count, exchanges=exchanges),
            local_to_global=local_to_global,
            ghost_to_global=ghost_to_global,
        ))

    return PartitionedProblem(spec=spec, partitions=partitions)


def split_local_remote(problem: PartitionedProblem, partition: int) -> SplitMatrix:
    """Cut a partition's full matrix into its local and remote parts.

    Local keeps exactly the columns below local_n (square); remote keeps the
    ghost columns shifted to a 0-based range (local_n x ghost_count). Both
    parts come back CSR-active inside DynamicMatrix wrappers.
    """
    part = problem.partitions[partition]
    a = part.a_full
    local_n = a.nrows
    rows = np.repeat(np.arange(local_n, dtype=np.int64), np.diff(a.row_offsets))
    is_local = a.col_indices < local_n

    def side(mask: np.ndarray, ncols: int, shift: int) -> CsrMatrix:
        offsets = np.zeros(local_n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows[mask], minlength=local_n), out=offsets[1:])
        return CsrMatrix(local_n, ncols, offsets,
                         a.col_indices[mask] - shift, a.values[mask])

    local = side(is_local, local_n, 0)
    remote = side(~is_local, part.halo.ghost_count, local_n)
    return SplitMatrix(local=DynamicMatrix(local), remote=DynamicMatrix(remote))


def exchange_halo(problem: PartitionedProblem, xs: list[DenseVector]) -> None:
    """Fill every partition's ghost slots from the owners' current values.

    Owned entries are never written, so the gather order cannot race; the
    plan's send indices always reference owned positions of the neighbor.
    """
    local_n = problem.spec.local_points
    for part, x in zip(problem.partitions, xs):
        want = local_n + part.halo.ghost_count
        if x.length != want:
            raise DimensionMismatch(
                f"partition {part.rank}: vector length {x.length} != {want}"
            )
    for part, x in zip(problem.partitions, xs):
        for ex in part.halo.exchanges:
            x.data[ex.recv_ghost_slots] = xs[ex.neighbor].data[ex.send_local_indices]


def distributed_spmv(backend: ExecBackend, problem: PartitionedProblem,
                     splits: list[SplitMatrix], xs: list[DenseVector],
                     ys: list[DenseVector],
                     per_partition_ns: list[int] | None = None) -> None:
    """y = A x across all partitions: halo exchange, then local + remote parts.

    Per partition, y is overwritten with local @ x_owned and accumulated with
    remote @ x_ghost; the result matches the undecomposed global SpMV
    restricted to each partition's rows. When ``per_partition_ns`` is given
    it receives each partition's compute time (exchange excluded), which the
    tuner uses for per-partition profiling.
    """
    exchange_halo(problem, xs)
    local_n = problem.spec.local_points
    for k, split in enumerate(splits):
        t0 = time.perf_counter_ns() if per_partition_ns is not None else 0
        x_owned = DenseVector(xs[k].data[:local_n])
        x_ghost = DenseVector(xs[k].data[local_n:])
        spmv(backend, split.local, x_owned, ys[k])
        spmv_add(backend, split.remote, x_ghost, ys[k])
        if per_partition_ns is not None:
            per_partition_ns[k] = time.perf_counter_ns() - t0

"""Sparse and dense containers, including the runtime-switchable DynamicMatrix.

Three concrete sparse storage formats are provided: coordinate triples
(CooMatrix), compressed sparse row (CsrMatrix) and diagonal storage
(DiaMatrix). DynamicMatrix composes the three behind one object whose active
format can change at runtime; kernels dispatch on the active format.

Containers are plain numpy-backed records. The ``build_*`` functions are the
validated constructors; the class initializers store arrays as given and are
meant for internal use where the invariants already hold.
"""

from __future__ import annotations

from enum import IntEnum
from typing import Iterator

import numpy as np

from .errors import (
    DuplicateOffset,
    IndexOutOfRange,
    LengthMismatch,
    NonMonotoneOffsets,
    NonzeroPadding,
    ShapeMismatch,
    UnknownFormat,
    UnsortedOffsets,
    UnsortedRow,
)


class FormatId(IntEnum):
    """Identifiers for the supported sparse storage formats.

    The index mapping (COO=0, CSR=1, DIA=2) is part of the public contract
    and stable across releases.
    """

    COO = 0
    CSR = 1
    DIA = 2


class MemorySpace(IntEnum):
    """Where a container's storage resides.

    Only host memory exists in this package; the tag keeps the copy and
    mirroring contracts explicit should device spaces be added.
    """

    HOST = 0


def as_format_id(value) -> FormatId:
    """Coerce a FormatId, its integer index, or its name to a FormatId.

    Raises UnknownFormat for anything outside the supported set.
    """
    if isinstance(value, FormatId):
        return value
    if isinstance(value, str):
        try:
            return FormatId[value.upper()]
        except KeyError:
            raise UnknownFormat(f"unknown format name {value!r}") from None
    if isinstance(value, (int, np.integer)):
        try:
            return FormatId(int(value))
        except ValueError:
            raise UnknownFormat(f"format index {int(value)} outside 0..2") from None
    raise UnknownFormat(f"cannot interpret {value!r} as a storage format")


def _as_count(value, name: str) -> int:
    n = int(value)
    if n < 0:
        raise ValueError(f"{name} must be nonnegative, got {n}")
    return n


def _int_array(values) -> np.ndarray:
    return np.ascontiguousarray(values, dtype=np.int64)


def _float_array(values) -> np.ndarray:
    return np.ascontiguousarray(values, dtype=np.float64)


class DenseVector:
    """Contiguous vector of 64-bit reals.

    Wrapping an existing float64 array shares its storage, which is what the
    aliasing operations in :mod:`dynsparse.datamove` rely on.
    """

    __slots__ = ("data", "space")

    def __init__(self, data, space: MemorySpace = MemorySpace.HOST):
        self.data = _float_array(data)
        self.space = space

    @classmethod
    def zeros(cls, n: int, space: MemorySpace = MemorySpace.HOST) -> "DenseVector":
        return cls(np.zeros(_as_count(n, "length")), space)

    @classmethod
    def ones(cls, n: int, space: MemorySpace = MemorySpace.HOST) -> "DenseVector":
        return cls(np.ones(_as_count(n, "length")), space)

    @property
    def length(self) -> int:
        return self.data.size

    def __len__(self) -> int:
        return self.data.size

    def __repr__(self) -> str:
        return f"DenseVector(length={self.length})"


class DenseMatrix:
    """Dense row-major matrix; coefficient (i, j) sits at i * ncols + j.

    Provided as a container only, no kernels operate on it.
    """

    __slots__ = ("nrows", "ncols", "data", "space")

    def __init__(self, nrows, ncols, data, space: MemorySpace = MemorySpace.HOST):
        self.nrows = _as_count(nrows, "nrows")
        self.ncols = _as_count(ncols, "ncols")
        self.data = _float_array(data)
        self.space = space
        if self.data.size != self.nrows * self.ncols:
            raise ShapeMismatch(
                f"dense data length {self.data.size} != {self.nrows} x {self.ncols}"
            )

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "DenseMatrix":
        return cls(nrows, ncols, np.zeros(int(nrows) * int(ncols)))

    def at(self, i: int, j: int) -> float:
        return float(self.data[i * self.ncols + j])

    def set(self, i: int, j: int, value: float) -> None:
        self.data[i * self.ncols + j] = value

    def __repr__(self) -> str:
        return f"DenseMatrix({self.nrows}x{self.ncols})"


class CooMatrix:
    """Coordinate-format sparse matrix: one (row, col, value) triple per entry.

    No ordering is imposed on the entries and duplicate coordinates are
    allowed; canonicalization (datamove) sorts and sums them.
    """

    format_id = FormatId.COO
    __slots__ = ("nrows", "ncols", "row_indices", "col_indices", "values", "space")

    def __init__(self, nrows, ncols, row_indices, col_indices, values,
                 space: MemorySpace = MemorySpace.HOST):
        self.nrows = _as_count(nrows, "nrows")
        self.ncols = _as_count(ncols, "ncols")
        self.row_indices = _int_array(row_indices)
        self.col_indices = _int_array(col_indices)
        self.values = _float_array(values)
        self.space = space

    @classmethod
    def empty(cls) -> "CooMatrix":
        return cls(0, 0, [], [], [])

    @property
    def nnz(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        return f"CooMatrix({self.nrows}x{self.ncols}, nnz={self.nnz})"


class CsrMatrix:
    """Compressed sparse row matrix.

    ``row_offsets`` has length nrows + 1 and marks each row's slice of
    ``col_indices``/``values``. Column indices are kept strictly increasing
    within each row, which makes round-trips deterministic.
    """

    format_id = FormatId.CSR
    __slots__ = ("nrows", "ncols", "row_offsets", "col_indices", "values", "space")

    def __init__(self, nrows, ncols, row_offsets, col_indices, values,
                 space: MemorySpace = MemorySpace.HOST):
        self.nrows = _as_count(nrows, "nrows")
        self.ncols = _as_count(ncols, "ncols")
        self.row_offsets = _int_array(row_offsets)
        self.col_indices = _int_array(col_indices)
        self.values = _float_array(values)
        self.space = space

    @classmethod
    def empty(cls) -> "CsrMatrix":
        return cls(0, 0, [0], [], [])

    @property
    def nnz(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        return f"CsrMatrix({self.nrows}x{self.ncols}, nnz={self.nnz})"


class DiaMatrix:
    """Diagonal-format sparse matrix.

    ``values`` is a dense (nrows x ndiags) array; column j holds the
    coefficients of the diagonal with offset ``offsets[j]``, so the entry
    (i, i + offsets[j]) is stored at ``values[i, j]``. Slots whose column
    i + offsets[j] falls outside [0, ncols) are padding and hold exactly 0.0.
    """

    format_id = FormatId.DIA
    __slots__ = ("nrows", "ncols", "offsets", "values", "space")

    def __init__(self, nrows, ncols, offsets, values,
                 space: MemorySpace = MemorySpace.HOST):
        self.nrows = _as_count(nrows, "nrows")
        self.ncols = _as_count(ncols, "ncols")
        self.offsets = _int_array(offsets)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        self.space = space

    @classmethod
    def empty(cls) -> "DiaMatrix":
        return cls(0, 0, [], np.zeros((0, 0)))

    @property
    def ndiags(self) -> int:
        return self.offsets.size

    @property
    def nnz(self) -> int:
        """Count of in-range slots holding a nonzero value.

        A zero on an in-range slot is indistinguishable from diagonal fill,
        so it does not count as a stored entry.
        """
        if self.values.size == 0:
            return 0
        mask = _dia_in_range_mask(self.nrows, self.ncols, self.offsets)
        return int(np.count_nonzero(self.values[mask]))

    def __repr__(self) -> str:
        return f"DiaMatrix({self.nrows}x{self.ncols}, ndiags={self.ndiags})"


def _dia_in_range_mask(nrows: int, ncols: int, offsets: np.ndarray) -> np.ndarray:
    """Boolean (nrows x ndiags) mask of slots that map inside the matrix."""
    cols = np.arange(nrows, dtype=np.int64)[:, None] + offsets[None, :]
    return (cols >= 0) & (cols < ncols)


class DynamicMatrix:
    """Sum container over the concrete sparse formats.

    Holds exactly one concrete payload at a time; ``active`` names its
    format. Dimension and nnz queries delegate to the payload whichever
    variant is active.
    """

    __slots__ = ("active", "payload")

    def __init__(self, payload):
        if isinstance(payload, DynamicMatrix):
            raise TypeError("DynamicMatrix payload must be a concrete container")
        if not isinstance(payload, (CooMatrix, CsrMatrix, DiaMatrix)):
            raise TypeError(f"unsupported payload type {type(payload).__name__}")
        self.payload = payload
        self.active = payload.format_id

    @property
    def nrows(self) -> int:
        return self.payload.nrows

    @property
    def ncols(self) -> int:
        return self.payload.ncols

    @property
    def nnz(self) -> int:
        return self.payload.nnz

    @property
    def space(self) -> MemorySpace:
        return self.payload.space

    def activate(self, target) -> "DynamicMatrix":
        """Switch the active format, installing an EMPTY target container.

        Existing data is discarded and the dimensions reset to 0x0; a
        data-preserving switch is ``datamove.convert_inplace``. Switching to
        the already-active format is a no-op.
        """
        target = as_format_id(target)
        if target == self.active:
            return self
        self.payload = _EMPTY_FACTORY[target]()
        self.active = target
        return self

    def __repr__(self) -> str:
        return f"DynamicMatrix(active={self.active.name}, payload={self.payload!r})"


_EMPTY_FACTORY = {
    FormatId.COO: CooMatrix.empty,
    FormatId.CSR: CsrMatrix.empty,
    FormatId.DIA: DiaMatrix.empty,
}


def activate(m: DynamicMatrix, target) -> DynamicMatrix:
    """Free-function form of :meth:`DynamicMatrix.activate`."""
    return m.activate(target)


def build_coo(nrows, ncols, rows, cols, vals) -> CooMatrix:
    """Validate and assemble a CooMatrix, preserving the input entry order.

    Duplicate coordinates are permitted; canonicalization sums them later.

    Raises
    ------
    LengthMismatch
        The three entry arrays differ in length (or are not 1-D).
    IndexOutOfRange
        Any index falls outside [0, nrows) x [0, ncols).
    """
    nrows = _as_count(nrows, "nrows")
    ncols = _as_count(ncols, "ncols")
    r = _int_array(rows)
    c = _int_array(cols)
    v = _float_array(vals)
    if r.ndim != 1 or c.ndim != 1 or v.ndim != 1:
        raise LengthMismatch("entry arrays must be one-dimensional")
    if not (r.size == c.size == v.size):
        raise LengthMismatch(
            f"entry arrays disagree on length: rows={r.size} cols={c.size} vals={v.size}"
        )
    if r.size:
        if int(r.min()) < 0 or int(r.max()) >= nrows:
            raise IndexOutOfRange(f"row index outside [0, {nrows})")
        if int(c.min()) < 0 or int(c.max()) >= ncols:
            raise IndexOutOfRange(f"column index outside [0, {ncols})")
    return CooMatrix(nrows, ncols, r, c, v)


def build_csr(nrows, ncols, row_offsets, cols, vals) -> CsrMatrix:
    """Validate and assemble a CsrMatrix.

    Raises
    ------
    LengthMismatch
        row_offsets is not nrows + 1 long, or nnz != row_offsets[nrows].
    NonMonotoneOffsets
        Offsets do not start at 0 or decrease somewhere.
    IndexOutOfRange
        A column index falls outside [0, ncols).
    UnsortedRow
        A row holds duplicate or decreasing column indices.
    """
    nrows = _as_count(nrows, "nrows")
    ncols = _as_count(ncols, "ncols")
    offs = _int_array(row_offsets)
    c = _int_array(cols)
    v = _float_array(vals)
    if offs.size != nrows + 1:
        raise LengthMismatch(f"row_offsets length {offs.size} != nrows + 1 = {nrows + 1}")
    if offs.size and offs[0] != 0:
        raise NonMonotoneOffsets(f"row_offsets[0] = {int(offs[0])}, expected 0")
    if np.any(np.diff(offs) < 0):
        raise NonMonotoneOffsets("row_offsets must be nondecreasing")
    if not (c.size == v.size == int(offs[-1])):
        raise LengthMismatch(
            f"nnz mismatch: cols={c.size} vals={v.size} row_offsets[-1]={int(offs[-1])}"
        )
    if c.size:
        if int(c.min()) < 0 or int(c.max()) >= ncols:
            raise IndexOutOfRange(f"column index outside [0, {ncols})")
        entry_rows = np.repeat(np.arange(nrows, dtype=np.int64), np.diff(offs))
        same_row = entry_rows[1:] == entry_rows[:-1]
        if np.any(same_row & (c[1:] <= c[:-1])):
            raise UnsortedRow("columns must be strictly increasing within each row")
    return CsrMatrix(nrows, ncols, offs, c, v)


def build_dia(nrows, ncols, offsets, values) -> DiaMatrix:
    """Validate and assemble a DiaMatrix.

    Raises
    ------
    ShapeMismatch
        values is not an (nrows x ndiags) array.
    DuplicateOffset / UnsortedOffsets
        Offsets repeat or are not strictly increasing.
    IndexOutOfRange
        An offset lies outside the open interval (-nrows, ncols).
    NonzeroPadding
        An out-of-range slot holds something other than exactly 0.0.
    """
    nrows = _as_count(nrows, "nrows")
    ncols = _as_count(ncols, "ncols")
    offs = _int_array(offsets)
    vals = np.ascontiguousarray(values, dtype=np.float64)
    if vals.ndim != 2 or vals.shape != (nrows, offs.size):
        raise ShapeMismatch(
            f"values shape {vals.shape} != (nrows, ndiags) = ({nrows}, {offs.size})"
        )
    if offs.size:
        steps = np.diff(offs)
        if np.any(steps == 0):
            raise DuplicateOffset("diagonal offsets must be unique")
        if np.any(steps < 0):
            raise UnsortedOffsets("diagonal offsets must be strictly increasing")
        if int(offs.min()) <= -nrows or int(offs.max()) >= ncols:
            raise IndexOutOfRange(
                f"offsets must lie in ({-nrows}, {ncols}) exclusive"
            )
        padding = ~_dia_in_range_mask(nrows, ncols, offs)
        if np.any(vals[padding] != 0.0):
            raise NonzeroPadding("padding slots must hold exactly 0.0")
    return DiaMatrix(nrows, ncols, offs, vals)


def entry_arrays(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Raw (rows, cols, values) arrays of a container's stored entries.

    COO and CSR report every stored triple, explicit zeros included. DIA
    reports in-range slots with nonzero values only (zero slots are
    indistinguishable from fill). CSR output is row-major and column-sorted;
    no other ordering is guaranteed. The returned arrays may be views of the
    container's storage and should be treated as read-only.
    """
    if isinstance(m, DynamicMatrix):
        m = m.payload
    if isinstance(m, CooMatrix):
        return m.row_indices, m.col_indices, m.values
    if isinstance(m, CsrMatrix):
        rows = np.repeat(np.arange(m.nrows, dtype=np.int64), np.diff(m.row_offsets))
        return rows, m.col_indices, m.values
    if isinstance(m, DiaMatrix):
        rows_parts, cols_parts, vals_parts = [], [], []
        for j in range(m.ndiags):
            d = int(m.offsets[j])
            i0 = max(0, -d)
            i1 = min(m.nrows, m.ncols - d)
            if i1 <= i0:
                continue
            chunk = m.values[i0:i1, j]
            hit = np.flatnonzero(chunk)
            if hit.size == 0:
                continue
            rows = i0 + hit
            rows_parts.append(rows)
            cols_parts.append(rows + d)
            vals_parts.append(chunk[hit])
        if not rows_parts:
            empty_i = np.empty(0, dtype=np.int64)
            return empty_i, empty_i.copy(), np.empty(0, dtype=np.float64)
        return (
            np.concatenate(rows_parts),
            np.concatenate(cols_parts),
            np.concatenate(vals_parts),
        )
    raise TypeError(f"not a sparse container: {type(m).__name__}")


def nonzero_entries(m) -> Iterator[tuple[int, int, float]]:
    """Yield every stored entry of a sparse container exactly once.

    DIA padding (and zero-valued in-range slots) is skipped. CSR yields
    row-major, column-sorted; other formats yield in an unspecified order.
    """
    rows, cols, vals = entry_arrays(m)
    for r, c, v in zip(rows.tolist(), cols.tolist(), vals.tolist()):
        yield (r, c, v)

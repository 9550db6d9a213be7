"""Copy semantics, format conversion, host mirroring and Matrix Market I/O.

Three levels of data movement are supported, mirroring the container design:

* shallow_copy - containers alias the same storage; nothing is transferred
  and the arrays live until the last alias is dropped.
* deep_copy    - a bitwise copy between compatible containers (same format,
  dimensions and buffer lengths); no state is shared afterwards.
* convert      - an element-wise rebuild into a possibly different format.
  Every conversion is routed through a canonical COO proxy rather than
  implementing one routine per format pair, so adding a format costs two
  conversions, not a row of the format matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DiaFillOverflow,
    IncompatibleContainers,
    ParseError,
    TypeMismatch,
)
from .formats import (
    CooMatrix,
    CsrMatrix,
    DenseMatrix,
    DenseVector,
    DiaMatrix,
    DynamicMatrix,
    FormatId,
    MemorySpace,
    as_format_id,
    entry_arrays,
)

MATRIX_MARKET_HEADER = "%%MatrixMarket matrix coordinate real general"


@dataclass
class MirrorPair:
    """A device container paired with a host-resident compatible mirror.

    When both sides live in the same memory space the host simply aliases the
    device storage and deep copies between them degenerate to no-ops.
    """

    device: object
    host: object


def default_fill_limit(m) -> int:
    """Default cap on DIA value slots: 10 x max(nnz, nrows)."""
    return 10 * max(m.nnz, m.nrows)


# ---------------------------------------------------------------------------
# shallow / deep copies
# ---------------------------------------------------------------------------

def _array_fields(m) -> tuple[str, ...]:
    if isinstance(m, CooMatrix):
        return ("row_indices", "col_indices", "values")
    if isinstance(m, CsrMatrix):
        return ("row_offsets", "col_indices", "values")
    if isinstance(m, DiaMatrix):
        return ("offsets", "values")
    if isinstance(m, (DenseVector,)):
        return ("data",)
    if isinstance(m, DenseMatrix):
        return ("data",)
    raise TypeError(f"not a container: {type(m).__name__}")


def _alias(src):
    """New container object sharing src's arrays."""
    if isinstance(src, CooMatrix):
        return CooMatrix(src.nrows, src.ncols, src.row_indices, src.col_indices,
                         src.values, space=src.space)
    if isinstance(src, CsrMatrix):
        return CsrMatrix(src.nrows, src.ncols, src.row_offsets, src.col_indices,
                         src.values, space=src.space)
    if isinstance(src, DiaMatrix):
        return DiaMatrix(src.nrows, src.ncols, src.offsets, src.values, space=src.space)
    if isinstance(src, DenseVector):
        return DenseVector(src.data, space=src.space)
    if isinstance(src, DenseMatrix):
        return DenseMatrix(src.nrows, src.ncols, src.data, space=src.space)
    raise TypeError(f"not a container: {type(src).__name__}")


def shallow_copy(src, dst=None):
    """Alias src's storage.

    With ``dst`` given, rebinds dst's fields onto src's arrays and returns
    dst; otherwise returns a fresh container of the same class sharing
    storage. Mutations through either handle are visible through both, and
    deallocation waits for the last alias (plain reference counting).

    Raises TypeMismatch when dst's declared type differs from src's (other
    format, other memory space, or mismatching dynamic active state).
    """
    if isinstance(src, DynamicMatrix):
        if dst is None:
            return DynamicMatrix(shallow_copy(src.payload))
        if not isinstance(dst, DynamicMatrix):
            raise TypeMismatch("cannot shallow-copy a DynamicMatrix onto a concrete container")
        if dst.active != src.active:
            raise TypeMismatch(
                f"active states differ: {src.active.name} vs {dst.active.name}"
            )
        dst.payload = shallow_copy(src.payload)
        return dst
    if dst is None:
        return _alias(src)
    if isinstance(dst, DynamicMatrix):
        raise TypeMismatch("cannot shallow-copy a concrete container onto a DynamicMatrix")
    if type(dst) is not type(src):
        raise TypeMismatch(
            f"formats differ: {type(src).__name__} vs {type(dst).__name__}"
        )
    if dst.space != src.space:
        raise TypeMismatch(f"memory spaces differ: {src.space.name} vs {dst.space.name}")
    for name in ("nrows", "ncols"):
        if hasattr(src, name):
            setattr(dst, name, getattr(src, name))
    for name in _array_fields(src):
        setattr(dst, name, getattr(src, name))
    return dst


def deep_copy(src, dst) -> None:
    """Bitwise-copy src's arrays into dst's existing buffers.

    src and dst must hold the same format with identical dimensions and
    buffer lengths; memory spaces may differ. When the buffers already alias
    each other the copy is an observable no-op.
    """
    if isinstance(src, DynamicMatrix) or isinstance(dst, DynamicMatrix):
        if not (isinstance(src, DynamicMatrix) and isinstance(dst, DynamicMatrix)):
            raise IncompatibleContainers("both sides must be DynamicMatrix, or neither")
        if src.active != dst.active:
            raise IncompatibleContainers(
                f"active states differ: {src.active.name} vs {dst.active.name}"
            )
        deep_copy(src.payload, dst.payload)
        return
    if type(src) is not type(dst):
        raise IncompatibleContainers(
            f"formats differ: {type(src).__name__} vs {type(dst).__name__}"
        )
    for name in ("nrows", "ncols"):
        if hasattr(src, name) and getattr(src, name) != getattr(dst, name):
            raise IncompatibleContainers(
                f"{name} differs: {getattr(src, name)} vs {getattr(dst, name)}"
            )
    for name in _array_fields(src):
        s = getattr(src, name)
        d = getattr(dst, name)
        if s.shape != d.shape:
            raise IncompatibleContainers(
                f"buffer {name!r} shapes differ: {s.shape} vs {d.shape}"
            )
        np.copyto(d, s)


def _alloc_like(src, space: MemorySpace):
    """Fresh zero-initialized container with src's format and shape."""
    if isinstance(src, CooMatrix):
        return CooMatrix(src.nrows, src.ncols, np.zeros(src.nnz, dtype=np.int64),
                         np.zeros(src.nnz, dtype=np.int64), np.zeros(src.nnz), space=space)
    if isinstance(src, CsrMatrix):
        return CsrMatrix(src.nrows, src.ncols, np.zeros(src.nrows + 1, dtype=np.int64),
                         np.zeros(src.nnz, dtype=np.int64), np.zeros(src.nnz), space=space)
    if isinstance(src, DiaMatrix):
        return DiaMatrix(src.nrows, src.ncols, src.offsets.copy(),
                         np.zeros_like(src.values), space=space)
    if isinstance(src, DenseVector):
        return DenseVector(np.zeros(src.length), space=space)
    if isinstance(src, DenseMatrix):
        return DenseMatrix(src.nrows, src.ncols, np.zeros(src.data.size), space=space)
    raise TypeError(f"not a container: {type(src).__name__}")


def create_mirror(src, space: MemorySpace = MemorySpace.HOST) -> MirrorPair:
    """Pair src with a compatible container in the requested space.

    When the requested space equals src's space the mirror aliases src, so a
    subsequent deep_copy between the two is a permitted no-op. Otherwise the
    mirror is a fresh compatible allocation that must be synchronized with an
    explicit deep_copy.
    """
    if isinstance(src, DynamicMatrix):
        inner = create_mirror(src.payload, space)
        return MirrorPair(device=src, host=DynamicMatrix(inner.host))
    if space == src.space:
        return MirrorPair(device=src, host=shallow_copy(src))
    return MirrorPair(device=src, host=_alloc_like(src, space))


# ---------------------------------------------------------------------------
# canonicalization and conversion
# ---------------------------------------------------------------------------

def _canonical_arrays(rows, cols, vals):
    """Sort triples by (row, col) and sum duplicates; zero sums are kept."""
    if rows.size == 0:
        return rows.copy(), cols.copy(), vals.copy()
    order = np.lexsort((cols, rows))
    r = rows[order]
    c = cols[order]
    v = vals[order]
    first = np.empty(r.size, dtype=bool)
    first[0] = True
    first[1:] = (r[1:] != r[:-1]) | (c[1:] != c[:-1])
    starts = np.flatnonzero(first)
    return r[starts], c[starts], np.add.reduceat(v, starts)


def canonicalize_coo(m: CooMatrix) -> CooMatrix:
    """Entries sorted by (row, col) with duplicate coordinates summed.

    Entries whose sum is exactly 0.0 are kept: dropping them would make nnz
    change under conversion.
    """
    r, c, v = _canonical_arrays(m.row_indices, m.col_indices, m.values)
    return CooMatrix(m.nrows, m.ncols, r, c, v, space=m.space)


def _to_coo_proxy(m) -> CooMatrix:
    rows, cols, vals = entry_arrays(m)
    return CooMatrix(m.nrows, m.ncols, rows, cols, vals, space=m.space)


def _coo_to_csr(coo: CooMatrix) -> CsrMatrix:
    counts = np.bincount(coo.row_indices, minlength=coo.nrows)
    offsets = np.zeros(coo.nrows + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return CsrMatrix(coo.nrows, coo.ncols, offsets, coo.col_indices, coo.values,
                     space=coo.space)


def _coo_to_dia(coo: CooMatrix, fill_limit: int) -> DiaMatrix:
    diags = coo.col_indices - coo.row_indices
    offsets = np.unique(diags)
    slots = int(offsets.size) * coo.nrows
    if slots > fill_limit:
        raise DiaFillOverflow(
            f"{offsets.size} diagonals x {coo.nrows} rows = {slots} value slots "
            f"exceed the fill limit of {fill_limit}"
        )
    values = np.zeros((coo.nrows, offsets.size))
    if diags.size:
        values[coo.row_indices, np.searchsorted(offsets, diags)] = coo.values
    return DiaMatrix(coo.nrows, coo.ncols, offsets, values, space=coo.space)


def convert(src, target, fill_limit: int | None = None):
    """Rebuild src as a container of the target format.

    All conversions route through a canonicalized COO proxy (duplicates
    summed, entries sorted), including format-to-same-format rebuilds. The
    result never shares storage with src and represents the same matrix with
    unchanged dimensions.

    ``fill_limit`` caps the DIA value-slot allocation (ndiags x nrows); it
    defaults to :func:`default_fill_limit` and DiaFillOverflow is raised if
    and only if the cap is exceeded.
    """
    target = as_format_id(target)
    m = src.payload if isinstance(src, DynamicMatrix) else src
    limit = default_fill_limit(m) if fill_limit is None else int(fill_limit)
    proxy = canonicalize_coo(_to_coo_proxy(m))
    if target == FormatId.COO:
        return proxy
    if target == FormatId.CSR:
        return _coo_to_csr(proxy)
    return _coo_to_dia(proxy, limit)


def convert_inplace(m: DynamicMatrix, target, fill_limit: int | None = None) -> None:
    """Switch a DynamicMatrix to the target format, preserving its data.

    A no-op when the target is already active (the payload storage is left
    untouched). On conversion failure the matrix is left unchanged.
    """
    target = as_format_id(target)
    if target == m.active:
        return
    new_payload = convert(m.payload, target, fill_limit)
    m.payload = new_payload
    m.active = target


# ---------------------------------------------------------------------------
# Matrix Market files
# ---------------------------------------------------------------------------

def write_matrix_market(m, path) -> None:
    """Write a sparse container as a Matrix Market coordinate file.

    Uses the exact header ``%%MatrixMarket matrix coordinate real general``
    and 1-based indices, one whitespace-separated triple per line.
    """
    mat = m.payload if isinstance(m, DynamicMatrix) else m
    rows, cols, vals = entry_arrays(mat)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(MATRIX_MARKET_HEADER + "\n")
        fh.write(f"{mat.nrows} {mat.ncols} {rows.size}\n")
        if rows.size:
            np.savetxt(fh, np.column_stack((rows + 1, cols + 1, vals)),
                       fmt="%d %d %.17g")


def read_matrix_market(path) -> CooMatrix:
    """Parse a Matrix Market coordinate file into a CooMatrix.

    Accepts ``real`` or ``integer`` fields with ``general`` symmetry; comment
    lines starting with ``%`` are ignored. Entries are converted from the
    on-disk 1-based indices to 0-based. Malformed content raises ParseError
    with the offending line number; I/O failures raise OSError.
    """
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    dims: tuple[int, int, int] | None = None
    saw_header = False
    lineno = 0
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not saw_header:
                tokens = line.split()
                if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
                    raise ParseError("malformed Matrix Market banner", lineno)
                obj, fmt, field, symmetry = (t.lower() for t in tokens[1:])
                if obj != "matrix":
                    raise ParseError(f"unsupported object kind {obj!r}", lineno)
                if fmt != "coordinate":
                    raise ParseError(f"unsupported format kind {fmt!r}", lineno)
                if field not in ("real", "integer"):
                    raise ParseError(f"unsupported field kind {field!r}", lineno)
                if symmetry != "general":
                    raise ParseError(f"unsupported symmetry {symmetry!r}", lineno)
                saw_header = True
                continue
            if not line or line.startswith("%"):
                continue
            parts = line.split()
            if dims is None:
                if len(parts) != 3:
                    raise ParseError("size line must hold 'nrows ncols nnz'", lineno)
                try:
                    nr, nc, nnz = (int(p) for p in parts)
                except ValueError:
                    raise ParseError("size line must hold three integers", lineno) from None
                if nr < 0 or nc < 0 or nnz < 0:
                    raise ParseError("sizes must be nonnegative", lineno)
                dims = (nr, nc, nnz)
                continue
            if len(parts) != 3:
                raise ParseError("entry line must hold 'row col value'", lineno)
            try:
                ri = int(parts[0])
                ci = int(parts[1])
                vv = float(parts[2])
            except ValueError:
                raise ParseError("entry line must hold two integers and a real", lineno) from None
            nr, nc, nnz = dims
            if len(rows) >= nnz:
                raise ParseError(f"more than the declared {nnz} entries", lineno)
            if not (1 <= ri <= nr) or not (1 <= ci <= nc):
                raise ParseError(
                    f"entry ({ri}, {ci}) outside the declared {nr} x {nc} shape", lineno
                )
            rows.append(ri - 1)
            cols.append(ci - 1)
            vals.append(vv)
    if not saw_header:
        raise ParseError("empty file, no Matrix Market banner", max(lineno, 1))
    if dims is None:
        raise ParseError("missing size line", max(lineno, 1))
    if len(rows) != dims[2]:
        raise ParseError(
            f"declared {dims[2]} entries but found {len(rows)}", max(lineno, 1)
        )
    return CooMatrix(
        dims[0], dims[1],
        np.asarray(rows, dtype=np.int64),
        np.asarray(cols, dtype=np.int64),
        np.asarray(vals, dtype=np.float64),
    )

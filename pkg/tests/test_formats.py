"""Container construction, validation and the dynamic format switch."""

import numpy as np
import pytest

from conftest import assert_same_entries, dense_of, entry_table, random_coo
from dynsparse import (
    CooMatrix,
    CsrMatrix,
    DiaMatrix,
    DuplicateOffset,
    DynamicMatrix,
    FormatId,
    IndexOutOfRange,
    LengthMismatch,
    NonMonotoneOffsets,
    NonzeroPadding,
    ShapeMismatch,
    UnknownFormat,
    UnsortedOffsets,
    UnsortedRow,
    as_format_id,
    build_coo,
    build_csr,
    build_dia,
    convert,
    nonzero_entries,
)


def test_format_id_index_mapping():
    assert FormatId.COO == 0
    assert FormatId.CSR == 1
    assert FormatId.DIA == 2
    assert len(FormatId) == 3


def test_as_format_id_accepts_names_and_indices():
    assert as_format_id("dia") is FormatId.DIA
    assert as_format_id(1) is FormatId.CSR
    assert as_format_id(FormatId.COO) is FormatId.COO
    with pytest.raises(UnknownFormat):
        as_format_id(7)
    with pytest.raises(UnknownFormat):
        as_format_id("ell")


# ---------------------------------------------------------------------------
# build_coo
# ---------------------------------------------------------------------------

def test_build_coo_identity():
    m = build_coo(2, 2, [0, 1], [0, 1], [1.0, 1.0])
    assert (m.nrows, m.ncols, m.nnz) == (2, 2, 2)
    assert np.array_equal(dense_of(m), np.eye(2))


def test_build_coo_empty():
    m = build_coo(0, 0, [], [], [])
    assert (m.nrows, m.ncols, m.nnz) == (0, 0, 0)


def test_build_coo_index_out_of_range():
    with pytest.raises(IndexOutOfRange):
        build_coo(2, 2, [0, 2], [0, 1], [1.0, 1.0])
    with pytest.raises(IndexOutOfRange):
        build_coo(2, 2, [0, 1], [0, -1], [1.0, 1.0])


def test_build_coo_length_mismatch():
    with pytest.raises(LengthMismatch):
        build_coo(2, 2, [0, 1], [0], [1.0, 1.0])


def test_build_coo_preserves_input_order_and_duplicates():
    m = build_coo(3, 3, [2, 0, 2], [1, 0, 1], [5.0, 1.0, -2.0])
    assert np.array_equal(m.row_indices, [2, 0, 2])
    assert m.nnz == 3
    assert dense_of(m)[2, 1] == 3.0


# ---------------------------------------------------------------------------
# build_csr
# ---------------------------------------------------------------------------

def test_build_csr_identity():
    m = build_csr(2, 2, [0, 1, 2], [0, 1], [1.0, 1.0])
    assert np.array_equal(dense_of(m), np.eye(2))


def test_build_csr_empty_rows():
    m = build_csr(2, 2, [0, 0, 0], [], [])
    assert m.nnz == 0
    assert np.array_equal(dense_of(m), np.zeros((2, 2)))


def test_build_csr_non_monotone_offsets():
    with pytest.raises(NonMonotoneOffsets):
        build_csr(2, 2, [0, 2, 1], [0, 1], [1.0, 1.0])
    with pytest.raises(NonMonotoneOffsets):
        build_csr(2, 2, [1, 1, 2], [0, 1], [1.0, 1.0])


def test_build_csr_offsets_length():
    with pytest.raises(LengthMismatch):
        build_csr(2, 2, [0, 1], [0], [1.0])


def test_build_csr_nnz_mismatch():
    with pytest.raises(LengthMismatch):
        build_csr(2, 2, [0, 1, 2], [0, 1, 1], [1.0, 1.0, 1.0])


def test_build_csr_column_out_of_range():
    with pytest.raises(IndexOutOfRange):
        build_csr(2, 2, [0, 1, 2], [0, 2], [1.0, 1.0])


def test_build_csr_unsorted_row():
    with pytest.raises(UnsortedRow):
        build_csr(2, 3, [0, 2, 2], [2, 0], [1.0, 1.0])
    with pytest.raises(UnsortedRow):  # duplicate column within a row
        build_csr(2, 3, [0, 2, 2], [1, 1], [1.0, 1.0])


# ---------------------------------------------------------------------------
# build_dia
# ---------------------------------------------------------------------------

def test_build_dia_identity():
    m = build_dia(3, 3, [0], [[1.0], [1.0], [1.0]])
    assert np.array_equal(dense_of(m), np.eye(3))


def test_build_dia_tridiagonal_against_entry_mapping_oracle():
    # 3x3 tridiagonal: sub-diagonal has no row-0 entry, so values[0][0] pads
    offsets = [-1, 0, 1]
    values = [
        [0.0, 2.0, 1.0],
        [1.0, 2.0, 1.0],
        [1.0, 2.0, 0.0],
    ]
    m = build_dia(3, 3, offsets, values)
    expected = np.array([
        [2.0, 1.0, 0.0],
        [1.0, 2.0, 1.0],
        [0.0, 1.0, 2.0],
    ])
    assert m.values[0, 0] == 0.0
    assert np.array_equal(dense_of(m), expected)


def test_build_dia_duplicate_offset():
    with pytest.raises(DuplicateOffset):
        build_dia(2, 2, [0, 0], [[1.0, 1.0], [1.0, 1.0]])


def test_build_dia_unsorted_offsets():
    with pytest.raises(UnsortedOffsets):
        build_dia(2, 2, [1, 0], [[1.0, 1.0], [0.0, 1.0]])


def test_build_dia_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        build_dia(3, 3, [0], [[1.0], [1.0]])


def test_build_dia_nonzero_padding():
    values = [[9.0, 2.0], [1.0, 2.0]]  # values[0][0] maps to column -1
    with pytest.raises(NonzeroPadding):
        build_dia(2, 2, [-1, 0], values)


def test_build_dia_offset_out_of_range():
    with pytest.raises(IndexOutOfRange):
        build_dia(2, 2, [2], [[0.0], [0.0]])


# ---------------------------------------------------------------------------
# activate
# ---------------------------------------------------------------------------

def test_activate_discards_data():
    m = DynamicMatrix(build_csr(2, 2, [0, 1, 2], [0, 1], [1.0, 1.0]))
    m.activate(FormatId.COO)
    assert m.active is FormatId.COO
    assert (m.nrows, m.ncols, m.nnz) == (0, 0, 0)


def test_activate_same_format_is_noop():
    m = DynamicMatrix(build_csr(2, 2, [0, 1, 2], [0, 1], [1.0, 1.0]))
    payload = m.payload
    m.activate(FormatId.CSR)
    assert m.payload is payload
    assert m.nnz == 2


def test_activate_unknown_format():
    m = DynamicMatrix(CooMatrix.empty())
    with pytest.raises(UnknownFormat):
        m.activate(7)


def test_activate_by_name_and_index():
    m = DynamicMatrix(CooMatrix.empty())
    m.activate("dia")
    assert m.active is FormatId.DIA
    m.activate(1)
    assert m.active is FormatId.CSR


# ---------------------------------------------------------------------------
# nonzero_entries
# ---------------------------------------------------------------------------

def test_nonzero_entries_identity_every_format():
    coo = build_coo(2, 2, [0, 1], [0, 1], [1.0, 1.0])
    for m in (coo, convert(coo, FormatId.CSR), convert(coo, FormatId.DIA),
              DynamicMatrix(convert(coo, FormatId.CSR))):
        assert set(nonzero_entries(m)) == {(0, 0, 1.0), (1, 1, 1.0)}


def test_nonzero_entries_empty():
    assert list(nonzero_entries(CooMatrix.empty())) == []
    assert list(nonzero_entries(CsrMatrix.empty())) == []
    assert list(nonzero_entries(DiaMatrix.empty())) == []


def test_nonzero_entries_dia_skips_padding():
    n = 3
    expected = sum(1 for i in range(n) for j in range(n) if abs(i - j) <= 1)
    values = np.ones((n, 3))
    values[0, 0] = 0.0
    values[n - 1, 2] = 0.0
    m = build_dia(n, n, [-1, 0, 1], values)
    assert expected == 7
    assert len(list(nonzero_entries(m))) == expected


def test_csr_entries_are_row_major_column_sorted():
    m = build_csr(3, 3, [0, 2, 2, 3], [0, 2, 1], [1.0, 2.0, 3.0])
    assert list(nonzero_entries(m)) == [(0, 0, 1.0), (0, 2, 2.0), (2, 1, 3.0)]


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------

def test_roundtrip_through_builders():
    rng = np.random.default_rng(1234)
    for _ in range(25):
        coo = random_coo(rng, max_dim=40)
        rebuilt = build_coo(coo.nrows, coo.ncols, *entry_table(coo))
        assert_same_entries(coo, rebuilt)

        csr = convert(coo, FormatId.CSR)
        rows, cols, vals = entry_table(csr)
        offsets = np.zeros(csr.nrows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=csr.nrows), out=offsets[1:])
        assert_same_entries(csr, build_csr(csr.nrows, csr.ncols, offsets, cols, vals))

        dia = convert(coo, FormatId.DIA, fill_limit=2**62)
        assert_same_entries(dia, build_dia(dia.nrows, dia.ncols, dia.offsets,
                                           dia.values))


def test_dynamic_queries_invariant_across_variants():
    rng = np.random.default_rng(77)
    for _ in range(10):
        coo = random_coo(rng, max_dim=32)
        canonical = convert(coo, FormatId.COO)
        wrapped = [
            DynamicMatrix(canonical),
            DynamicMatrix(convert(coo, FormatId.CSR)),
            DynamicMatrix(convert(coo, FormatId.DIA, fill_limit=2**62)),
        ]
        dims = {(m.nrows, m.ncols, m.nnz) for m in wrapped}
        assert len(dims) == 1


def test_build_coo_rejects_mutated_inputs():
    rng = np.random.default_rng(99)
    for _ in range(40):
        coo = random_coo(rng, max_dim=24)
        if coo.nnz == 0:
            continue
        k = int(rng.integers(coo.nnz))
        case = int(rng.integers(4))
        rows = coo.row_indices.copy()
        cols = coo.col_indices.copy()
        vals = coo.values.copy()
        if case == 0:
            rows[k] = coo.nrows
            expected = IndexOutOfRange
        elif case == 1:
            cols[k] = -1
            expected = IndexOutOfRange
        elif case == 2:
            rows = rows[:-1]
            expected = LengthMismatch
        else:
            cols[k] = coo.ncols + 3
            expected = IndexOutOfRange
        with pytest.raises(expected):
            build_coo(coo.nrows, coo.ncols, rows, cols, vals)


def test_build_csr_rejects_mutated_inputs():
    rng = np.random.default_rng(101)
    for _ in range(40):
        csr = convert(random_coo(rng, max_dim=24), FormatId.CSR)
        if csr.nnz == 0:
            continue
        offs = csr.row_offsets.copy()
        cols = csr.col_indices.copy()
        vals = csr.values.copy()
        case = int(rng.integers(4))
        if case == 0:
            k = int(rng.integers(1, offs.size))
            offs[k] = offs[k] - (offs[k] + 1)  # force a decrease
            expected = (NonMonotoneOffsets, LengthMismatch)
        elif case == 1:
            cols[int(rng.integers(cols.size))] = csr.ncols
            expected = IndexOutOfRange
        elif case == 2:
            vals = vals[:-1]
            expected = LengthMismatch
        else:
            lengths = np.diff(offs)
            wide = np.flatnonzero(lengths >= 2)
            if wide.size == 0:
                continue
            start = int(offs[wide[0]])
            cols[start + 1] = cols[start]  # duplicate within the row
            expected = UnsortedRow
        with pytest.raises(expected):
            build_csr(csr.nrows, csr.ncols, offs, cols, vals)


def test_build_dia_rejects_mutated_inputs():
    rng = np.random.default_rng(103)
    for _ in range(40):
        dia = convert(random_coo(rng, max_dim=24), FormatId.DIA,
                      fill_limit=2**62)
        if dia.ndiags == 0:
            continue
        offs = dia.offsets.copy()
        vals = dia.values.copy()
        case = int(rng.integers(3))
        if case == 0 and dia.ndiags >= 2:
            offs[1] = offs[0]
            expected = DuplicateOffset
        elif case == 1 and dia.ndiags >= 2:
            offs = offs[::-1].copy()
            expected = UnsortedOffsets
        else:
            padding = ~(
                (np.arange(dia.nrows)[:, None] + offs[None, :] >= 0)
                & (np.arange(dia.nrows)[:, None] + offs[None, :] < dia.ncols)
            )
            if not padding.any():
                continue
            i, j = np.argwhere(padding)[0]
            vals[i, j] = 1.0
            expected = NonzeroPadding
        with pytest.raises(expected):
            build_dia(dia.nrows, dia.ncols, offs, vals)


def test_dynamic_matrix_rejects_non_containers():
    with pytest.raises(TypeError):
        DynamicMatrix(np.eye(2))
    with pytest.raises(TypeError):
        DynamicMatrix(DynamicMatrix(CooMatrix.empty()))

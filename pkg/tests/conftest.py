"""Shared oracles and corpus builders for the test suite.

The oracles reconstruct matrices straight from each format's raw storage
arrays, independently of the library's own traversal code, so they can
referee it.
"""

from __future__ import annotations

import numpy as np

from dynsparse import (
    CooMatrix,
    CsrMatrix,
    DiaMatrix,
    DynamicMatrix,
    build_coo,
    entry_arrays,
)


def dense_of(m) -> np.ndarray:
    """Dense reconstruction from raw storage arrays (library-independent)."""
    if isinstance(m, DynamicMatrix):
        m = m.payload
    out = np.zeros((m.nrows, m.ncols))
    if isinstance(m, CooMatrix):
        for r, c, v in zip(m.row_indices, m.col_indices, m.values):
            out[r, c] += v
    elif isinstance(m, CsrMatrix):
        for i in range(m.nrows):
            for k in range(int(m.row_offsets[i]), int(m.row_offsets[i + 1])):
                out[i, m.col_indices[k]] += m.values[k]
    elif isinstance(m, DiaMatrix):
        for j in range(m.ndiags):
            d = int(m.offsets[j])
            for i in range(m.nrows):
                c = i + d
                if 0 <= c < m.ncols:
                    out[i, c] += m.values[i, j]
    else:
        raise TypeError(f"not a sparse container: {type(m).__name__}")
    return out


def entry_table(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The container's entries sorted by (row, col), duplicates in stored order."""
    rows, cols, vals = entry_arrays(m)
    order = np.lexsort((cols, rows))
    return np.asarray(rows)[order], np.asarray(cols)[order], np.asarray(vals)[order]


def assert_same_entries(a, b) -> None:
    """Exact (bitwise) equality of two containers' entry sets."""
    ra, ca, va = entry_table(a)
    rb, cb, vb = entry_table(b)
    assert np.array_equal(ra, rb), "row indices differ"
    assert np.array_equal(ca, cb), "column indices differ"
    assert np.array_equal(va, vb), "values differ"


def random_coo(rng: np.random.Generator, max_dim: int = 128,
               min_density: float = 0.01, max_density: float = 0.5) -> CooMatrix:
    """A random COO matrix; duplicate coordinates may occur."""
    nrows = int(rng.integers(1, max_dim + 1))
    ncols = int(rng.integers(1, max_dim + 1))
    density = float(rng.uniform(min_density, max_density))
    nnz = int(round(density * nrows * ncols))
    rows = rng.integers(0, nrows, size=nnz)
    cols = rng.integers(0, ncols, size=nnz)
    vals = rng.standard_normal(nnz)
    return build_coo(nrows, ncols, rows, cols, vals)


def relative_error(actual: np.ndarray, expected: np.ndarray) -> float:
    """2-norm error relative to the expected vector (absolute when it is 0)."""
    norm = float(np.linalg.norm(expected))
    err = float(np.linalg.norm(actual - expected))
    return err / norm if norm > 0 else err


def stencil_nnz_by_enumeration(nx: int, ny: int, nz: int) -> int:
    """Count stencil couplings by walking every point's neighborhood."""
    count = 0
    for z in range(nz):
        for y in range(ny):
            for x in range(nx):
                for dz in (-1, 0, 1):
                    for dy in (-1, 0, 1):
                        for dx in (-1, 0, 1):
                            if (0 <= x + dx < nx and 0 <= y + dy < ny
                                    and 0 <= z + dz < nz):
                                count += 1
    return count

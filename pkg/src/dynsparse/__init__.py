"""dynsparse: sparse linear algebra with runtime-switchable storage formats.

The package bundles three concrete sparse containers (COO, CSR, DIA) behind
a DynamicMatrix whose active format can change at runtime, format-dispatched
kernels with serial and threaded backends, copy/conversion machinery with a
COO conversion proxy, a 27-point stencil problem generator with in-process
domain decomposition, an unpreconditioned CG solver, a per-partition format
auto-tuner, and a phased benchmark CLI.
"""

from .errors import (
    BreakdownZeroCurvature,
    DiaFillOverflow,
    DimensionMismatch,
    DuplicateOffset,
    DynSparseError,
    EmptySearchSpace,
    IncompatibleContainers,
    IndexOutOfRange,
    LengthMismatch,
    NonMonotoneOffsets,
    NonzeroPadding,
    ParseError,
    ShapeMismatch,
    StructurallyAbsentDiagonal,
    TypeMismatch,
    UnknownFormat,
    UnsortedOffsets,
    UnsortedRow,
    ValidationFailed,
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
    activate,
    as_format_id,
    build_coo,
    build_csr,
    build_dia,
    entry_arrays,
    nonzero_entries,
)
from .datamove import (
    MirrorPair,
    canonicalize_coo,
    convert,
    convert_inplace,
    create_mirror,
    deep_copy,
    default_fill_limit,
    read_matrix_market,
    shallow_copy,
    write_matrix_market,
)
from .kernels import (
    SERIAL,
    ExecBackend,
    dot,
    extract_diagonal,
    reduce,
    scan,
    spmv,
    spmv_add,
    update_diagonal,
    waxpby,
)
from .stencil import (
    GridSpec,
    HaloExchange,
    HaloPlan,
    PartitionData,
    PartitionedProblem,
    SplitMatrix,
    distributed_spmv,
    exchange_halo,
    generate_problem,
    split_local_remote,
)
from .solver import (
    CgResult,
    DistributedOperator,
    ValidationReport,
    cg,
    validate_solver,
)
from .tuner import (
    FORMATS,
    FormatPlan,
    TimingTable,
    profile_formats,
    read_timing_table,
    select_plan,
    write_timing_table,
)
from .bench import BenchConfig, RunReport, emit_report, run_benchmark

__version__ = "0.1.0"

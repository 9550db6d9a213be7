"""Exception types raised across the library."""


class DynSparseError(Exception):
    """Base class for every error this package raises on purpose."""


class LengthMismatch(DynSparseError):
    """Parallel entry arrays disagree on length."""


class IndexOutOfRange(DynSparseError):
    """A row, column or diagonal index lies outside the matrix dimensions."""


class NonMonotoneOffsets(DynSparseError):
    """CSR row offsets do not start at zero or are not nondecreasing."""


class UnsortedRow(DynSparseError):
    """A CSR row holds duplicate or decreasing column indices."""


class DuplicateOffset(DynSparseError):
    """A DIA offset array stores the same diagonal twice."""


class UnsortedOffsets(DynSparseError):
    """A DIA offset array is not strictly increasing."""


class ShapeMismatch(DynSparseError):
    """A DIA value array does not have shape nrows x ndiags."""


class NonzeroPadding(DynSparseError):
    """A DIA padding slot holds something other than exactly 0.0."""


class UnknownFormat(DynSparseError):
    """A format identifier outside the supported set (COO, CSR, DIA)."""


class TypeMismatch(DynSparseError):
    """Shallow copy asked to alias containers of different format or space."""


class IncompatibleContainers(DynSparseError):
    """Deep copy between containers whose buffers are not bitwise compatible."""


class DiaFillOverflow(DynSparseError):
    """Converting to DIA would allocate more value slots than the fill limit."""


class ParseError(DynSparseError):
    """Malformed Matrix Market content.

    Carries the 1-based line number where parsing failed.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DimensionMismatch(DynSparseError):
    """Kernel operands disagree on dimensions."""


class StructurallyAbsentDiagonal(DynSparseError):
    """A diagonal update hit a row whose (i, i) entry is not stored."""

    def __init__(self, index: int):
        super().__init__(f"diagonal entry ({index}, {index}) is not structurally present")
        self.index = index


class BreakdownZeroCurvature(DynSparseError):
    """CG observed p'Ap <= 0, which signals a non-SPD operator."""


class ValidationFailed(DynSparseError):
    """Solver validation missed its iteration bound or residual target.

    The failed report is attached as ``report``.
    """

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class EmptySearchSpace(DynSparseError):
    """Every format combination in a tuner search space was skipped."""

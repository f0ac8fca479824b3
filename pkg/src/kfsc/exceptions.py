"""Exception and warning types shared across the package."""


class KFSCError(Exception):
    """Base class for all library errors."""


class ShapeMismatchError(KFSCError):
    """Operands have incompatible shapes."""


class ZeroColumnError(KFSCError):
    """A data column has (numerically) zero norm and cannot be normalized."""

    def __init__(self, index: int):
        super().__init__(f"column {index} has zero norm and cannot be normalized")
        self.index = index


class NeedTwoBlocksError(KFSCError):
    """The regularization-weight rule needs at least two dictionary blocks."""


class AmbiguousSupportError(KFSCError):
    """A coefficient column has zero or several nonzero blocks."""

    def __init__(self, index: int, count: int):
        super().__init__(
            f"column {index} has {count} nonzero blocks; support-based "
            f"assignment needs exactly one"
        )
        self.index = index
        self.count = count


class InvalidParamsError(KFSCError):
    """Hyper-parameters or inputs violate their constraints."""


class EmptyClusterError(KFSCError):
    """k-means cannot produce k clusters (fewer samples than clusters)."""


class EmptyColumnObservationError(KFSCError):
    """A masked column has no observed entries."""

    def __init__(self, index: int):
        super().__init__(f"column {index} has no observed entries")
        self.index = index


class LengthMismatchError(KFSCError):
    """Two label sequences differ in length."""


class InvalidConfigError(KFSCError):
    """A generator configuration violates its constraints."""


class ParseError(KFSCError):
    """A matrix file entry could not be parsed."""

    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class HeaderMismatchError(KFSCError):
    """A binary file header does not match the expected magic or sizes."""


class DegenerateBlockWarning(UserWarning):
    """A dictionary block is numerically zero; its step constant was floored."""

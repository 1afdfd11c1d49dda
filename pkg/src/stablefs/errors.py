"""Exception hierarchy shared by all stablefs modules."""


class StablefsError(Exception):
    """Base class for every error raised by this package."""


# --- trace ingestion ---------------------------------------------------------

class MissingFile(StablefsError):
    pass


class MalformedRow(StablefsError):
    def __init__(self, line: int, message: str = ""):
        self.line = line
        super().__init__(message or f"malformed row at line {line}")


class UnknownTargetColumn(StablefsError):
    pass


class NonNumericCell(StablefsError):
    def __init__(self, line: int, column: str, message: str = ""):
        self.line = line
        self.column = column
        super().__init__(message or f"non-numeric cell at line {line}, column {column!r}")


class EmptyMatrix(StablefsError):
    pass


class OutOfRange(StablefsError):
    pass


# --- ranking -----------------------------------------------------------------

class DegenerateGraph(StablefsError):
    pass


class MissingTargets(StablefsError):
    pass


# --- forest ------------------------------------------------------------------

class TooFewSamples(StablefsError):
    pass


class DimensionMismatch(StablefsError):
    pass


# --- online selection --------------------------------------------------------

class FedAfterDone(StablefsError):
    pass


class SizeMismatch(StablefsError):
    pass


class EmptySet(StablefsError):
    pass


class InsufficientSamples(StablefsError):
    pass


# --- evaluation --------------------------------------------------------------

class LengthMismatch(StablefsError):
    pass


class ZeroMeanTarget(StablefsError):
    pass


# --- synthesis ---------------------------------------------------------------

class InvalidSpec(StablefsError):
    pass

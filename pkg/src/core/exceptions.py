"""
Exception hierarchy for the CVD store.

Every error raised by the package derives from ``CVDError`` so callers
(the CLI in particular) can map failures to exit codes in one place.
"""

from typing import Optional


class CVDError(Exception):
    """Base class for all CVD errors."""

    exit_code: int = 1


class NotFoundError(CVDError):
    """A CVD, version, partition or staging table does not exist."""


class MissingVersionError(NotFoundError):
    """A metadata row or rlist references a version that was never committed."""


class AlreadyExistsError(CVDError):
    """A CVD with this name already exists."""


class CorruptionError(CVDError):
    """On-disk state is inconsistent with the manifest."""

    exit_code = 2


class StructuralCorruptionError(CorruptionError):
    """The version graph is not a DAG."""


class ConstraintError(CVDError):
    """Primary-key uniqueness violated."""


class SchemaError(CVDError):
    """Schema narrowing, unknown attribute, or incompatible primary keys."""


class ParseError(CVDError):
    """Malformed CSV or schema input."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StagingConflictError(CVDError):
    """A staging table with this name already exists."""


class OrphanTableError(CVDError):
    """A table without provenance was handed to commit."""


class EmptyScopeError(CVDError):
    """Statistics were requested over zero versions."""


class ParameterError(CVDError, ValueError):
    """An algorithm parameter is out of range."""


class InfeasibleBudgetError(CVDError):
    """The storage budget is below the minimum achievable storage."""


class ScaleError(CVDError):
    """Input too large for an exhaustive routine."""


class InvariantViolationError(CVDError):
    """An internal invariant was broken; indicates a bug."""


class ConsistencyError(CVDError):
    """Two schemes or a plan and a store disagree on the version set."""


class StoreLockedError(CVDError):
    """Another writer holds the CVD lock."""


class PartitionTimeout(CVDError):
    """A partitioner exceeded its deadline."""


class SimulatedCrash(Exception):
    """Raised by an armed fail point; deliberately not a ``CVDError``."""

    def __init__(self, point: str):
        self.point = point
        super().__init__(f"simulated crash at {point}")

"""Core domain types and the version graph."""

from .exceptions import (
    AlreadyExistsError,
    CVDError,
    ConsistencyError,
    ConstraintError,
    CorruptionError,
    EmptyScopeError,
    InfeasibleBudgetError,
    InvariantViolationError,
    MissingVersionError,
    NotFoundError,
    OrphanTableError,
    ParameterError,
    ParseError,
    PartitionTimeout,
    ScaleError,
    SchemaError,
    SimulatedCrash,
    StagingConflictError,
    StoreLockedError,
    StructuralCorruptionError,
)
from .types import (
    Attribute,
    BipartiteStats,
    DType,
    Record,
    RecordId,
    VersionId,
    VersionMeta,
    format_vid,
    parse_vid,
)
from .version_graph import (
    VersionGraph,
    as_rlist,
    bipartite_stats,
    build_version_graph,
    dag_to_tree,
    kept_parent,
)

__all__ = [
    "AlreadyExistsError",
    "Attribute",
    "BipartiteStats",
    "CVDError",
    "ConsistencyError",
    "ConstraintError",
    "CorruptionError",
    "DType",
    "EmptyScopeError",
    "InfeasibleBudgetError",
    "InvariantViolationError",
    "MissingVersionError",
    "NotFoundError",
    "OrphanTableError",
    "ParameterError",
    "ParseError",
    "PartitionTimeout",
    "Record",
    "RecordId",
    "ScaleError",
    "SchemaError",
    "SimulatedCrash",
    "StagingConflictError",
    "StoreLockedError",
    "StructuralCorruptionError",
    "VersionGraph",
    "VersionId",
    "VersionMeta",
    "as_rlist",
    "bipartite_stats",
    "build_version_graph",
    "dag_to_tree",
    "format_vid",
    "kept_parent",
    "parse_vid",
]

"""CVD operations: init, checkout, commit, diff and version scans."""

from .engine import DiffResult, VersioningEngine, read_version, union_columns
from .query import Clause, filter_records, parse_predicate
from .staging import MaterializedTable, StagingArea, StagingEntry

__all__ = [
    "Clause",
    "DiffResult",
    "MaterializedTable",
    "StagingArea",
    "StagingEntry",
    "VersioningEngine",
    "filter_records",
    "parse_predicate",
    "read_version",
    "union_columns",
]

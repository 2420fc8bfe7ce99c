"""On-disk storage of CVDs."""

from .csv_io import read_csv_rows, read_schema_file, write_csv_rows, write_schema_file
from .manifest import arm_failpoint, disarm_failpoints, failpoint
from .segment import DataSegment
from .store import CVDStore, check_primary_key, init_store

__all__ = [
    "CVDStore",
    "DataSegment",
    "arm_failpoint",
    "check_primary_key",
    "disarm_failpoints",
    "failpoint",
    "init_store",
    "read_csv_rows",
    "read_schema_file",
    "write_csv_rows",
    "write_schema_file",
]

"""
Staging area for checked-out tables.

The index ``staging.json`` at the CVD root maps a table name to the
versions it was derived from. Staged tables live under ``.staging/`` as
CSV with a leading ``_rid`` column; tables checked out to a user CSV are
indexed by the file's absolute path.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd
from dateutil import parser as date_parser

from ..core.exceptions import NotFoundError, OrphanTableError, StagingConflictError
from ..core.types import DType, VersionId, utc_now
from ..storage.csv_io import Column, read_csv_rows, write_csv_rows

logger = logging.getLogger(__name__)

INDEX_FILE = "staging.json"
STAGING_DIR = ".staging"


@dataclass
class StagingEntry:
    """Provenance of a checked-out table."""

    name: str
    cvd: str
    parent_vids: Tuple[VersionId, ...]
    created_at: datetime = field(default_factory=utc_now)
    path: str = ""
    kind: str = "table"
    columns: List[Column] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "cvd": self.cvd,
            "parent_vids": list(self.parent_vids),
            "created_at": self.created_at.isoformat(),
            "path": self.path,
            "kind": self.kind,
            "columns": [[n, d.value] for n, d in self.columns],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StagingEntry":
        return cls(
            name=data["name"],
            cvd=data["cvd"],
            parent_vids=tuple(int(v) for v in data["parent_vids"]),
            created_at=date_parser.isoparse(data["created_at"]),
            path=data.get("path", ""),
            kind=data.get("kind", "table"),
            columns=[(n, DType(d)) for n, d in data.get("columns", [])],
        )


@dataclass
class MaterializedTable:
    """A checked-out table: rows with optional rids plus provenance.

    Rows carrying a rid are unmodified copies of CVD records; rows whose rid
    is None are new or edited.
    """

    name: str
    columns: List[Column]
    rows: List[Tuple[Any, ...]]
    rids: List[Optional[int]]
    provenance: Optional[StagingEntry] = None

    @property
    def column_names(self) -> List[str]:
        return [c[0] for c in self.columns]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([list(r) for r in self.rows], columns=self.column_names, dtype=object)

    def set_row(self, index: int, values: Sequence[Any]) -> None:
        """Replace a row; the row no longer refers to a stored record."""
        self.rows[index] = tuple(values)
        self.rids[index] = None

    def add_row(self, values: Sequence[Any]) -> None:
        self.rows.append(tuple(values))
        self.rids.append(None)

    def delete_row(self, index: int) -> None:
        del self.rows[index]
        del self.rids[index]


class StagingArea:
    """Index of staged tables under one CVD root directory."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.index_path = self.root / INDEX_FILE
        self.table_dir = self.root / STAGING_DIR

    def _read(self) -> Dict[str, StagingEntry]:
        if not self.index_path.exists():
            return {}
        with open(self.index_path, "r") as f:
            raw = json.load(f)
        return {name: StagingEntry.from_dict(entry) for name, entry in raw.items()}

    def _write(self, entries: Dict[str, StagingEntry]) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        tmp = self.index_path.with_suffix(".json.tmp")
        with open(tmp, "w") as f:
            json.dump({n: e.to_dict() for n, e in sorted(entries.items())}, f, indent=2)
        os.replace(tmp, self.index_path)

    def entries(self) -> List[StagingEntry]:
        return list(self._read().values())

    def get(self, name: str) -> StagingEntry:
        entries = self._read()
        if name not in entries:
            raise OrphanTableError(f"table '{name}' has no checkout provenance")
        return entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self._read()

    def table_path(self, name: str) -> Path:
        return self.table_dir / f"{name}.csv"

    def add(
        self, entry: StagingEntry, table: MaterializedTable, csv_path: Optional[Path] = None
    ) -> None:
        """Register a table; ``csv_path`` exports to a user file instead of staging."""
        entries = self._read()
        if entry.name in entries:
            raise StagingConflictError(f"table '{entry.name}' is already staged")
        if csv_path is not None:
            write_csv_rows(csv_path, table.columns, table.rows)
            entry.kind = "csv"
            entry.path = str(csv_path)
        else:
            self.table_dir.mkdir(parents=True, exist_ok=True)
            path = self.table_path(entry.name)
            write_csv_rows(path, table.columns, table.rows, rids=table.rids)
            entry.path = str(path)
        entries[entry.name] = entry
        self._write(entries)
        logger.info(f"Staged '{entry.name}' from {entry.cvd} {list(entry.parent_vids)}")

    def load(self, name: str) -> MaterializedTable:
        entry = self.get(name)
        if entry.kind != "table":
            raise NotFoundError(f"'{name}' was checked out to a CSV file; commit it with -f")
        rows, rids = read_csv_rows(Path(entry.path), entry.columns)
        return MaterializedTable(name, list(entry.columns), rows, rids, entry)

    def save(self, table: MaterializedTable) -> None:
        """Persist edits to a staged table."""
        entry = self.get(table.name)
        write_csv_rows(Path(entry.path), table.columns, table.rows, rids=table.rids)
        entry.columns = list(table.columns)
        entries = self._read()
        entries[table.name] = entry
        self._write(entries)

    def remove(self, name: str) -> None:
        entries = self._read()
        entry = entries.pop(name, None)
        if entry is None:
            return
        if entry.kind == "table":
            Path(entry.path).unlink(missing_ok=True)
        self._write(entries)

    def purge(self, cvd: str) -> List[str]:
        """Drop every entry of ``cvd``; returns the removed names."""
        names = [e.name for e in self.entries() if e.cvd == cvd]
        for name in names:
            self.remove(name)
        return names

"""
CSV import/export and ``-s`` schema files.

A schema file lists one ``name:type`` per line; blank lines and lines
starting with ``#`` are ignored.

In CSV files ``\\N`` marks a null. An empty cell is the empty string in a
text column and a null elsewhere. A text value made of backslashes and a
final ``N`` is written with one extra backslash.
"""

import logging
import re
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple

import pandas as pd

from ..core.exceptions import ParseError, SchemaError
from ..core.types import DType

logger = logging.getLogger(__name__)

RID_COLUMN = "_rid"
NULL_TOKEN = "\\N"
_ESCAPED_RE = re.compile(r"^\\+N$")
_LINE_RE = re.compile(r"line (\d+)")

Column = Tuple[str, DType]


def read_schema_file(path: Path) -> List[Column]:
    """Parse a ``name:type`` schema file."""
    columns: List[Column] = []
    with open(path, "r") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise ParseError(f"expected 'name:type', got '{line}'", line=lineno)
            name, type_name = (part.strip() for part in line.split(":", 1))
            if not name:
                raise ParseError("empty attribute name", line=lineno)
            try:
                dtype = DType.parse(type_name)
            except ParseError as e:
                raise ParseError(str(e), line=lineno)
            columns.append((name, dtype))
    names = [c[0] for c in columns]
    if len(set(names)) != len(names):
        raise SchemaError(f"duplicate attribute names in {path}")
    return columns


def write_schema_file(path: Path, columns: Sequence[Column]) -> None:
    with open(path, "w") as f:
        for name, dtype in columns:
            f.write(f"{name}:{dtype.value}\n")


def read_csv_rows(
    path: Path, columns: Sequence[Column]
) -> Tuple[List[Tuple[Any, ...]], List[Optional[int]]]:
    """Read a CSV whose header matches ``columns`` (in any order).

    Returns rows ordered as ``columns`` and, per row, the optional rid taken
    from a ``_rid`` column.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        return [], []
    except pd.errors.ParserError as e:
        match = _LINE_RE.search(str(e))
        raise ParseError(f"malformed CSV {path.name}", line=int(match.group(1)) if match else None)

    names = [c[0] for c in columns]
    header = [c for c in frame.columns if c != RID_COLUMN]
    if sorted(header) != sorted(names):
        raise SchemaError(f"CSV header {header} does not match schema {names}")

    rids: List[Optional[int]] = []
    if RID_COLUMN in frame.columns:
        for lineno, cell in enumerate(frame[RID_COLUMN], start=2):
            try:
                rids.append(None if cell in ("", NULL_TOKEN) else int(cell))
            except ValueError:
                raise ParseError(f"invalid rid '{cell}'", line=lineno)
    else:
        rids = [None] * len(frame)

    rows: List[Tuple[Any, ...]] = []
    cells = frame[names].itertuples(index=False, name=None)
    for lineno, raw in enumerate(cells, start=2):
        try:
            rows.append(
                tuple(
                    None if cell == NULL_TOKEN else dtype.coerce(_unescape(cell))
                    for cell, (_, dtype) in zip(raw, columns)
                )
            )
        except ParseError as e:
            raise ParseError(str(e), line=lineno)
    return rows, rids


def write_csv_rows(
    path: Path,
    columns: Sequence[Column],
    rows: Sequence[Sequence[Any]],
    rids: Optional[Sequence[Optional[int]]] = None,
) -> None:
    """Write rows (optionally with their rids) as RFC-4180 CSV."""
    names = [c[0] for c in columns]
    frame = pd.DataFrame(
        [[_escape(v) for v in r] for r in rows], columns=names, dtype=object
    )
    if rids is not None:
        frame.insert(0, RID_COLUMN, pd.array(list(rids), dtype="Int64"))
    frame.to_csv(path, index=False, na_rep=NULL_TOKEN)
    logger.debug(f"Wrote {len(frame)} rows to {path}")


def _escape(value: Any) -> Any:
    if isinstance(value, str) and _ESCAPED_RE.match(value):
        return "\\" + value
    return value


def _unescape(cell: str) -> str:
    if cell.startswith("\\\\") and _ESCAPED_RE.match(cell):
        return cell[1:]
    return cell

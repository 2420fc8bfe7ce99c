"""
Domain types shared by every module of the CVD store.

Records are immutable tuples keyed by a record id (rid); versions are
identified by a version id (vid) and described by a metadata row.
"""

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, Sequence, Tuple

from dateutil import parser as date_parser

from .exceptions import ParseError

RecordId = int
VersionId = int


class DType(str, Enum):
    """Attribute types, ordered from most specific to most general."""

    INTEGER = "integer"
    DECIMAL = "decimal"
    TEXT = "text"

    @property
    def rank(self) -> int:
        return _DTYPE_RANK[self]

    def generalizes(self, other: "DType") -> bool:
        """True when values of ``other`` can be stored under ``self``."""
        return self.rank >= other.rank

    @classmethod
    def parse(cls, name: str) -> "DType":
        key = name.strip().lower()
        if key in _DTYPE_ALIASES:
            return _DTYPE_ALIASES[key]
        raise ParseError(f"unknown attribute type '{name}'")

    def coerce(self, value: Any) -> Any:
        """Convert a raw value (CSV cell, pandas scalar) into this type.

        Missing values (None, NaN, empty string) become None.
        """
        if value is None:
            return None
        if isinstance(value, float) and math.isnan(value):
            return None
        if isinstance(value, str) and value == "" and self is not DType.TEXT:
            return None
        try:
            if self is DType.INTEGER:
                if isinstance(value, float):
                    if not value.is_integer():
                        raise ValueError(f"{value} is not integral")
                    return int(value)
                return int(value)
            if self is DType.DECIMAL:
                return float(value)
            return str(value)
        except (TypeError, ValueError) as e:
            raise ParseError(f"cannot read {value!r} as {self.value}: {e}")


_DTYPE_RANK = {DType.INTEGER: 0, DType.DECIMAL: 1, DType.TEXT: 2}
_DTYPE_ALIASES = {
    "integer": DType.INTEGER,
    "int": DType.INTEGER,
    "bigint": DType.INTEGER,
    "decimal": DType.DECIMAL,
    "float": DType.DECIMAL,
    "double": DType.DECIMAL,
    "real": DType.DECIMAL,
    "numeric": DType.DECIMAL,
    "text": DType.TEXT,
    "str": DType.TEXT,
    "string": DType.TEXT,
    "varchar": DType.TEXT,
}


@dataclass(frozen=True)
class Attribute:
    """One entry of the single attribute pool.

    ``attr_id`` values are dense (1..N in pool order); a property change
    never edits an entry, it appends a new one.
    """

    attr_id: int
    name: str
    dtype: DType

    def to_dict(self) -> Dict[str, Any]:
        return {"attr_id": self.attr_id, "name": self.name, "dtype": self.dtype.value}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Attribute":
        return cls(int(data["attr_id"]), str(data["name"]), DType(data["dtype"]))


@dataclass(frozen=True)
class Record:
    """Immutable record; ``values[i]`` belongs to attribute id ``i + 1``.

    Attributes beyond ``len(values)`` are null.
    """

    rid: RecordId
    values: Tuple[Any, ...]

    def value(self, attr_id: int) -> Any:
        idx = attr_id - 1
        if 0 <= idx < len(self.values):
            return self.values[idx]
        return None

    def project(self, attr_ids: Sequence[int]) -> Tuple[Any, ...]:
        return tuple(self.value(a) for a in attr_ids)


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


@dataclass
class VersionMeta:
    """Metadata row of one version.

    ``parents`` is kept in precedence order (the order given to checkout).
    ``children`` is derived when the metadata table is loaded.
    """

    vid: VersionId
    parents: Tuple[VersionId, ...] = ()
    children: Tuple[VersionId, ...] = ()
    create_time: datetime = field(default_factory=utc_now)
    commit_time: datetime = field(default_factory=utc_now)
    message: str = ""
    attributes: Tuple[int, ...] = ()
    checkout_frequency: int = 1
    parent_weights: Dict[VersionId, int] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        # children and frequency are not persisted in the append-only log
        return {
            "vid": self.vid,
            "parents": list(self.parents),
            "create_time": self.create_time.isoformat(),
            "commit_time": self.commit_time.isoformat(),
            "message": self.message,
            "attributes": list(self.attributes),
            "parent_weights": {str(k): v for k, v in self.parent_weights.items()},
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "VersionMeta":
        return cls(
            vid=int(data["vid"]),
            parents=tuple(int(p) for p in data.get("parents", [])),
            create_time=date_parser.isoparse(data["create_time"]),
            commit_time=date_parser.isoparse(data["commit_time"]),
            message=data.get("message", ""),
            attributes=tuple(int(a) for a in data.get("attributes", [])),
            parent_weights={
                int(k): int(v) for k, v in data.get("parent_weights", {}).items()
            },
        )


@dataclass(frozen=True)
class BipartiteStats:
    """Sizes of the version-record bipartite graph G=(V,R,E)."""

    n_versions: int
    n_records: int
    n_edges: int
    n_duplicated: int = 0

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.n_versions, self.n_records, self.n_edges)


def format_vid(vid: VersionId) -> str:
    return f"v{vid}"


def parse_vid(text: str) -> VersionId:
    """Accept ``v12`` or ``12``."""
    raw = text.strip()
    if raw[:1] in ("v", "V"):
        raw = raw[1:]
    try:
        vid = int(raw)
    except ValueError:
        raise ParseError(f"invalid version id '{text}'")
    if vid < 1:
        raise ParseError(f"invalid version id '{text}'")
    return vid

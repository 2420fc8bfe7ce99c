"""Conjunctive attribute predicates: ``attr op value[, attr op value ...]``."""

import operator
import re
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Sequence

from ..core.exceptions import ParseError, SchemaError
from ..core.types import Attribute, Record

_CLAUSE = re.compile(r"^\s*([^=!<>\s]+)\s*(<=|>=|!=|=|<|>)\s*(.*?)\s*$")

OPERATORS: Dict[str, Callable[[Any, Any], bool]] = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


@dataclass(frozen=True)
class Clause:
    attr_id: int
    op: str
    value: Any

    def matches(self, record: Record) -> bool:
        actual = record.value(self.attr_id)
        if actual is None:
            return False
        return OPERATORS[self.op](actual, self.value)


def _strip_quotes(text: str) -> str:
    if len(text) >= 2 and text[0] == text[-1] and text[0] in ("'", '"'):
        return text[1:-1]
    return text


def parse_predicate(text: str, attributes: Sequence[Attribute]) -> List[Clause]:
    """Parse a predicate against one version's schema; empty text means true."""
    by_name = {a.name: a for a in attributes}
    clauses = []
    for part in [p for p in text.split(",") if p.strip()]:
        match = _CLAUSE.match(part)
        if not match:
            raise ParseError(f"cannot parse predicate clause '{part.strip()}'")
        name, op, raw = match.groups()
        if name not in by_name:
            raise SchemaError(f"unknown attribute '{name}'")
        attr = by_name[name]
        clauses.append(Clause(attr.attr_id, op, attr.dtype.coerce(_strip_quotes(raw))))
    return clauses


def filter_records(records: Sequence[Record], clauses: Sequence[Clause]) -> List[Record]:
    return [r for r in records if all(c.matches(r) for c in clauses)]

"""
Versioning engine: init, checkout, commit, diff and scans over CVDs.

Commits are compared only against their parent versions: a row equal (by
its full value tuple) to a parent record reuses that record's rid, every
other row becomes a new record with a fresh rid.
"""

import logging
import shutil
from collections import ChainMap
from dataclasses import dataclass
from itertools import chain
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from ..config import settings
from ..core.exceptions import (
    ConstraintError,
    OrphanTableError,
    ParameterError,
    SchemaError,
    StagingConflictError,
)
from ..core.types import Attribute, DType, Record, VersionId, VersionMeta, utc_now
from ..core.version_graph import VersionGraph
from ..maintain.maintainer import PartitionMaintainer
from ..storage.csv_io import Column, read_csv_rows, read_schema_file
from ..storage.store import CVDStore, check_primary_key, init_store
from .query import filter_records, parse_predicate
from .staging import MaterializedTable, StagingArea, StagingEntry

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiffResult:
    only_in_a: FrozenSet[int]
    only_in_b: FrozenSet[int]


def _trim(values: Sequence[Any]) -> Tuple[Any, ...]:
    values = list(values)
    while values and values[-1] is None:
        values.pop()
    return tuple(values)


def read_version(store: CVDStore, vid: VersionId) -> Tuple[List[Record], int]:
    """Records of ``vid`` in rlist order and the records read to get them."""
    segment = store.load_partition(store.partition_of(vid))
    index = segment.by_rid()
    return [index[rid] for rid in store.rlist(vid).tolist()], segment.cost


def union_columns(store: CVDStore, vids: Sequence[VersionId]) -> List[Column]:
    """Columns of a multi-version table: names in precedence order, widest type."""
    columns: Dict[str, DType] = {}
    for vid in vids:
        for attr in store.version_attributes(vid):
            prev = columns.get(attr.name)
            if prev is None or attr.dtype.rank > prev.rank:
                columns[attr.name] = attr.dtype
    return list(columns.items())


class VersioningEngine:
    """Entry point for every CVD operation under one root directory."""

    def __init__(self, root: Optional[Path] = None):
        self.root = Path(root or settings.store.root)
        self.staging = StagingArea(self.root)
        self._stores: Dict[str, CVDStore] = {}

    # CVD management --------------------------------------------------------

    def _cvd_path(self, name: str) -> Path:
        if not name or "/" in name or name.startswith(".") or name == "staging.json":
            raise ParameterError(f"invalid CVD name '{name}'")
        return self.root / name

    def open(self, name: str) -> CVDStore:
        """Handle on a CVD, reused across calls on this engine."""
        path = self._cvd_path(name)
        store = self._stores.get(name)
        if store is None or not path.is_dir():
            self._stores.pop(name, None)
            store = self._stores[name] = CVDStore(path)
        else:
            store.refresh()
        return store

    def init(
        self,
        name: str,
        schema: Sequence[Column],
        primary_key: Sequence[str] = (),
        csv_path: Optional[Path] = None,
        rows: Optional[Sequence[Sequence[Any]]] = None,
        message: str = "init",
    ) -> CVDStore:
        """Create a CVD whose root version holds the CSV (or given) rows."""
        attributes = [Attribute(i, n, d) for i, (n, d) in enumerate(schema, start=1)]
        if csv_path is not None:
            rows, _ = read_csv_rows(Path(csv_path), schema)
        self.root.mkdir(parents=True, exist_ok=True)
        store = init_store(self._cvd_path(name), attributes, primary_key, rows or (), message)
        self._stores[name] = store
        return store

    def list_cvds(self) -> List[str]:
        if not self.root.exists():
            return []
        return sorted(
            p.name
            for p in self.root.iterdir()
            if p.is_dir() and not p.name.startswith(".") and any(p.glob("MANIFEST-*.json"))
        )

    def drop_cvd(self, name: str) -> List[str]:
        """Delete a CVD and its staged tables; returns the purged table names."""
        store = self.open(name)
        with store.writer(blocking=True):
            purged = self.staging.purge(name)
            if purged:
                logger.warning(f"Dropping '{name}' discards live checkouts: {purged}")
            shutil.rmtree(store.path)
        self._stores.pop(name, None)
        logger.info(f"Dropped CVD '{name}'")
        return purged

    def maintainer(self, name: str) -> PartitionMaintainer:
        return PartitionMaintainer(self.open(name))

    # Reads -----------------------------------------------------------------

    def version_graph(self, name: str) -> VersionGraph:
        return self.open(name).version_graph()

    def read_version(self, name: str, vid: VersionId) -> Tuple[List[Record], int]:
        return read_version(self.open(name), vid)

    def log(self, name: str) -> List[VersionMeta]:
        store = self.open(name)
        return [store.metas[v] for v in store.vids]

    def _lineage(self, name: str, vid: VersionId) -> nx.DiGraph:
        store = self.open(name)
        store.meta(vid)
        dag = nx.DiGraph()
        dag.add_nodes_from(store.vids)
        dag.add_edges_from((p, m.vid) for m in store.metas.values() for p in m.parents)
        return dag

    def ancestors(self, name: str, vid: VersionId) -> List[VersionId]:
        return sorted(nx.ancestors(self._lineage(name, vid), vid))

    def descendants(self, name: str, vid: VersionId) -> List[VersionId]:
        return sorted(nx.descendants(self._lineage(name, vid), vid))

    def diff(self, name: str, a: VersionId, b: VersionId) -> DiffResult:
        store = self.open(name)
        ra, rb = store.rlist(a), store.rlist(b)
        return DiffResult(
            only_in_a=frozenset(np.setdiff1d(ra, rb).tolist()),
            only_in_b=frozenset(np.setdiff1d(rb, ra).tolist()),
        )

    def scan_version(self, name: str, vid: VersionId, predicate: str = "") -> List[Record]:
        """Records of ``vid`` satisfying a conjunctive predicate; nulls never match."""
        store = self.open(name)
        clauses = parse_predicate(predicate, store.version_attributes(vid))
        records, _ = read_version(store, vid)
        return filter_records(records, clauses)

    def merge_rows(
        self, store: CVDStore, vids: Sequence[VersionId]
    ) -> Tuple[List[Column], List[Tuple[Any, ...]], List[Optional[int]]]:
        """Precedence merge: earlier versions win primary-key conflicts."""
        for vid in vids:
            store.meta(vid)
        columns = union_columns(store, vids)
        col_index = {n: i for i, (n, _) in enumerate(columns)}
        pk = list(store.primary_key)
        rows: List[Tuple[Any, ...]] = []
        rids: List[Optional[int]] = []
        seen = set()
        for vid in vids:
            attrs = store.version_attributes(vid)
            names = {a.name for a in attrs}
            missing = [k for k in pk if k not in names]
            if missing:
                raise SchemaError(f"v{vid} lacks primary key attributes {missing}")
            slots = [(col_index[a.name], a.attr_id) for a in attrs]
            records, _ = read_version(store, vid)
            for record in records:
                values: List[Any] = [None] * len(columns)
                for idx, attr_id in slots:
                    raw = record.value(attr_id)
                    values[idx] = None if raw is None else columns[idx][1].coerce(raw)
                # keys compare after widening so 3 and 3.0 collide
                key = tuple(values[col_index[k]] for k in pk) if pk else ("rid", record.rid)
                if key in seen:
                    continue
                seen.add(key)
                rows.append(tuple(values))
                rids.append(record.rid)
        return columns, rows, rids

    # Checkout --------------------------------------------------------------

    def checkout(
        self,
        name: str,
        vids: Sequence[VersionId],
        dest_name: Optional[str] = None,
        csv_path: Optional[Path] = None,
    ) -> MaterializedTable:
        """Materialize the precedence merge of ``vids`` as a staged table or CSV."""
        if not vids:
            raise ParameterError("checkout needs at least one version")
        if (dest_name is None) == (csv_path is None):
            raise ParameterError("give exactly one of a table name or a CSV path")
        store = self.open(name)
        table_name = dest_name or str(Path(csv_path).resolve())
        if table_name in self.staging:
            raise StagingConflictError(f"table '{table_name}' is already staged")

        columns, rows, rids = self.merge_rows(store, vids)
        entry = StagingEntry(table_name, name, tuple(vids), utc_now(), columns=columns)
        table = MaterializedTable(table_name, columns, rows, rids, entry)
        self.staging.add(entry, table, Path(csv_path).resolve() if csv_path else None)
        store.bump_frequencies(vids)
        versions = ",".join(f"v{v}" for v in vids)
        logger.info(f"Checked out {name} {versions} as '{table_name}' ({len(rows)} rows)")
        return table

    def load_table(self, table_name: str) -> MaterializedTable:
        return self.staging.load(table_name)

    def save_table(self, table: MaterializedTable) -> None:
        self.staging.save(table)

    def load_csv_table(self, csv_path: Path, schema_path: Path) -> MaterializedTable:
        """Read an edited CSV checkout back, with its ``-s`` schema file."""
        key = str(Path(csv_path).resolve())
        entry = self.staging.get(key)
        columns = read_schema_file(Path(schema_path))
        rows, rids = read_csv_rows(Path(csv_path), columns)
        return MaterializedTable(key, columns, rows, rids, entry)

    # Commit ----------------------------------------------------------------

    def commit(self, table: MaterializedTable | str, message: str = "") -> VersionId:
        """Commit a checked-out table as a child of its provenance versions."""
        if isinstance(table, str):
            table = self.load_table(table)
        entry = table.provenance
        if entry is None or table.name not in self.staging:
            raise OrphanTableError(f"table '{table.name}' has no checkout provenance")
        if not message:
            logger.warning(f"Committing '{table.name}' with an empty message")
        store = self.open(entry.cvd)
        vid = self._commit_rows(
            store, entry.parent_vids, table.columns, table.rows, table.rids, message,
            created_at=entry.created_at,
        )
        self.staging.remove(table.name)
        return vid

    def commit_derived(
        self,
        name: str,
        parent_vids: Sequence[VersionId],
        rows: Sequence[Sequence[Any]],
        message: str = "",
        columns: Optional[Sequence[Column]] = None,
        rids: Optional[Sequence[Optional[int]]] = None,
    ) -> VersionId:
        """Commit in-memory rows as a child of ``parent_vids`` without staging."""
        store = self.open(name)
        if columns is None:
            columns = union_columns(store, parent_vids)
        if rids is None:
            rids = [None] * len(rows)
        return self._commit_rows(store, parent_vids, columns, rows, rids, message)

    def _resolve_schema(
        self, store: CVDStore, parent_vids: Sequence[VersionId], columns: Sequence[Column]
    ) -> Tuple[List[Attribute], List[Attribute]]:
        """Map columns onto the attribute pool; returns (version attrs, new attrs)."""
        current: Dict[str, Attribute] = {}
        for attr in store.attributes:
            current[attr.name] = attr
        for vid in reversed(parent_vids):
            for attr in store.version_attributes(vid):
                current[attr.name] = attr

        pool = {(attr.name, attr.dtype): attr for attr in store.attributes}

        chosen: List[Attribute] = []
        added: List[Attribute] = []
        next_id = len(store.attributes) + 1
        for name, dtype in columns:
            existing = current.get(name)
            if existing is not None and existing.dtype == dtype:
                chosen.append(existing)
                continue
            if existing is not None and not dtype.generalizes(existing.dtype):
                raise SchemaError(
                    f"attribute '{name}' cannot narrow from {existing.dtype.value} to {dtype.value}"
                )
            if (name, dtype) in pool:
                chosen.append(pool[(name, dtype)])
                continue
            attr = Attribute(next_id, name, dtype)
            next_id += 1
            added.append(attr)
            chosen.append(attr)
            logger.info(f"{store.name}: new attribute {attr.attr_id} '{name}' ({dtype.value})")
        return chosen, added

    def _commit_rows(
        self,
        store: CVDStore,
        parent_vids: Sequence[VersionId],
        columns: Sequence[Column],
        rows: Sequence[Sequence[Any]],
        rids: Sequence[Optional[int]],
        message: str,
        created_at: Any = None,
    ) -> VersionId:
        if not parent_vids:
            raise OrphanTableError("a commit needs at least one parent version")
        if len(set(parent_vids)) != len(parent_vids):
            raise ParameterError("parent versions must be distinct")
        names = [c[0] for c in columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names")
        missing = [k for k in store.primary_key if k not in names]
        if missing:
            raise SchemaError(f"table lacks primary key attributes {missing}")

        with store.writer():
            for vid in parent_vids:
                store.meta(vid)
            attrs, added = self._resolve_schema(store, parent_vids, columns)
            width = max((a.attr_id for a in attrs), default=0)
            candidates: List[Tuple[Any, ...]] = []
            for row in rows:
                if len(row) != len(columns):
                    raise SchemaError(f"row has {len(row)} values for {len(columns)} columns")
                values: List[Any] = [None] * width
                for attr, raw in zip(attrs, row):
                    values[attr.attr_id - 1] = attr.dtype.coerce(raw)
                candidates.append(_trim(values))

            key_ids = [next(a.attr_id for a in attrs if a.name == k) for k in store.primary_key]
            check_primary_key(
                (Record(i, v) for i, v in enumerate(candidates)), key_ids, context="commit: "
            )

            known: Dict[int, Record] = {}
            by_values: Dict[Tuple[Any, ...], int] = {}
            for vid in parent_vids:
                records, _ = read_version(store, vid)
                for record in records:
                    known.setdefault(record.rid, record)
                    by_values.setdefault(_trim(record.values), record.rid)

            next_rid = store.next_rid
            rlist: List[int] = []
            used = set()
            fresh: Dict[int, Record] = {}
            for values, hint in zip(candidates, rids):
                rid = None
                if hint is not None and hint in known and _trim(known[hint].values) == values:
                    rid = hint
                elif values in by_values:
                    rid = by_values[values]
                if rid is None or rid in used:
                    rid = next_rid
                    next_rid += 1
                    fresh[rid] = Record(rid, values)
                used.add(rid)
                rlist.append(rid)

            return self._store_version(
                store, parent_vids, attrs, added, rlist, fresh, known, message, created_at
            )

    def commit_delta(
        self,
        name: str,
        parent_vids: Sequence[VersionId],
        keep_rids: Sequence[int],
        new_rows: Sequence[Sequence[Any]],
        message: str = "",
    ) -> VersionId:
        """Commit parent records kept by rid plus new rows, without value diffing.

        ``new_rows`` follow the attribute order of the first parent and always
        become new records; kept rids must belong to some parent.
        """
        store = self.open(name)
        if not parent_vids:
            raise OrphanTableError("a commit needs at least one parent version")
        with store.writer():
            attrs = store.version_attributes(parent_vids[0])
            for vid in parent_vids[1:]:
                store.meta(vid)
            keep = np.asarray(keep_rids, dtype=np.int64)
            if np.unique(keep).size != keep.size:
                raise ParameterError("kept rids must be distinct")
            pool = np.unique(np.concatenate([store.rlist(p) for p in parent_vids]))
            stray = np.setdiff1d(keep, pool)
            if stray.size:
                raise ConstraintError(f"rids {stray[:5].tolist()} are not in any parent version")
            pids = sorted({store.partition_of(p) for p in parent_vids})
            known = ChainMap(*[store.load_partition(pid).by_rid() for pid in pids])

            fresh: Dict[int, Record] = {}
            next_rid = store.next_rid
            for row in new_rows:
                if len(row) != len(attrs):
                    raise SchemaError(f"row has {len(row)} values for {len(attrs)} attributes")
                values: List[Any] = [None] * max(a.attr_id for a in attrs)
                for attr, raw in zip(attrs, row):
                    values[attr.attr_id - 1] = attr.dtype.coerce(raw)
                fresh[next_rid] = Record(next_rid, _trim(values))
                next_rid += 1

            key_ids = [next(a.attr_id for a in attrs if a.name == k) for k in store.primary_key]
            kept = (known[r] for r in keep.tolist())
            check_primary_key(chain(kept, fresh.values()), key_ids, context="commit: ")
            rlist = keep.tolist() + list(fresh)
            return self._store_version(
                store, parent_vids, attrs, [], rlist, fresh, known, message, None
            )

    def _store_version(
        self,
        store: CVDStore,
        parent_vids: Sequence[VersionId],
        attrs: Sequence[Attribute],
        added: Sequence[Attribute],
        rlist: List[int],
        fresh: Dict[int, Record],
        known: Mapping[int, Record],
        message: str,
        created_at: Any,
    ) -> VersionId:
        """Pick the partition, append what it lacks and publish the version."""
        vid = store.next_vid
        rl = np.array(rlist, dtype=np.int64)
        weights = {p: int(np.intersect1d(rl, store.rlist(p)).size) for p in parent_vids}
        maintainer = PartitionMaintainer(store)
        pid, decision = maintainer.decide(vid, parent_vids, weights)
        held = (
            store.segment_rids(pid)
            if pid in store.manifest.segments
            else np.empty(0, dtype=np.int64)
        )
        to_append = [
            fresh[r] if r in fresh else known[r] for r in np.setdiff1d(rl, held).tolist()
        ]
        meta = VersionMeta(
            vid=vid,
            parents=tuple(parent_vids),
            create_time=created_at or utc_now(),
            commit_time=utc_now(),
            message=message,
            attributes=tuple(a.attr_id for a in attrs),
            parent_weights=weights,
        )
        store.append_commit(to_append, (vid, pid, rlist), meta, added)
        logger.info(
            f"Committed {store.name} v{vid} (parents {list(parent_vids)}): "
            f"{len(fresh)} new records, partition {pid}"
            f"{' (new)' if decision.new_partition else ''}"
        )
        maintainer.after_commit(vid)
        return vid

"""
Durable on-disk representation of one CVD.

Directory layout (see docs/STORAGE_FORMAT.md):

    attributes.json    primary key line, then one attribute per line (append-only)
    metadata.json      one VersionMeta per line (append-only)
    versions.tsv       vid<TAB>partition_id<TAB>space-separated rids
    part_<k>.seg       binary data segment of partition k
    frequencies.json   checkout frequencies (advisory, outside the manifest)
    policy.json        maintenance policy set by ``optimize``
    LOCK               advisory writer lock
    MANIFEST-<gen>.json

Writers hold ``LOCK`` and publish a new manifest as their commit point.
Readers load the latest manifest and only read committed byte prefixes.
"""

import fcntl
import json
import logging
import os
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..config import settings
from ..core.exceptions import (
    AlreadyExistsError,
    ConsistencyError,
    ConstraintError,
    CorruptionError,
    NotFoundError,
    SchemaError,
    StoreLockedError,
)
from ..core.types import Attribute, Record, VersionId, VersionMeta
from ..core.version_graph import VersionGraph, build_version_graph
from . import manifest as mf
from .segment import DataSegment, decode_segment, encode_header, encode_rows

logger = logging.getLogger(__name__)

ATTRIBUTES_FILE = "attributes.json"
METADATA_FILE = "metadata.json"
VERSIONS_FILE = "versions.tsv"
FREQUENCIES_FILE = "frequencies.json"
POLICY_FILE = "policy.json"
LOCK_FILE = "LOCK"


def segment_filename(partition_id: int) -> str:
    return f"part_{partition_id}.seg"


class CVDStore:
    """Handle on one CVD directory."""

    def __init__(self, path: Path, fsync: Optional[bool] = None):
        self.path = Path(path)
        self.name = self.path.name
        self.fsync = settings.store.fsync if fsync is None else fsync
        if not self.path.is_dir() or mf.latest_generation(self.path) is None:
            raise NotFoundError(f"CVD '{self.name}' not found")
        self._lock_fd: Optional[int] = None
        self._lock_depth = 0
        self._segments: Dict[int, Tuple[Tuple[int, Tuple[int, ...]], DataSegment]] = {}
        self._segment_rids: Dict[int, np.ndarray] = {}
        self.reload()

    # Creation --------------------------------------------------------------

    @classmethod
    def create(
        cls,
        path: Path,
        attributes: Sequence[Attribute],
        primary_key: Sequence[str],
        fsync: Optional[bool] = None,
    ) -> "CVDStore":
        """Create an empty CVD directory (no versions yet)."""
        path = Path(path)
        if path.exists() and any(path.iterdir()):
            raise AlreadyExistsError(f"CVD '{path.name}' already exists")
        names = [a.name for a in attributes]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate attribute names in schema")
        missing = [k for k in primary_key if k not in names]
        if missing:
            raise SchemaError(f"primary key attributes {missing} are not in the schema")
        for i, attr in enumerate(attributes, start=1):
            if attr.attr_id != i:
                raise SchemaError("attribute ids must be dense and start at 1")

        path.mkdir(parents=True, exist_ok=True)
        lines = [json.dumps({"primary_key": list(primary_key)})]
        lines += [json.dumps(a.to_dict()) for a in attributes]
        attr_bytes = ("\n".join(lines) + "\n").encode("utf-8")
        (path / ATTRIBUTES_FILE).write_bytes(attr_bytes)
        (path / METADATA_FILE).touch()
        (path / VERSIONS_FILE).touch()
        (path / LOCK_FILE).touch()

        manifest = mf.Manifest(generation=1)
        manifest.files[ATTRIBUTES_FILE] = len(attr_bytes)
        do_sync = settings.store.fsync if fsync is None else fsync
        if do_sync:
            mf.fsync_file(path / ATTRIBUTES_FILE)
        mf.publish(path, manifest, sync=do_sync)
        logger.info(f"Created CVD '{path.name}' with {len(attributes)} attributes")
        return cls(path, fsync=fsync)

    # Loading ---------------------------------------------------------------

    def reload(self) -> None:
        """Load the latest committed state from disk."""
        for attempt in range(3):
            try:
                self._load()
                return
            except FileNotFoundError:
                # a writer applied a pending rename under us; retry
                if attempt == 2:
                    raise

    def refresh(self) -> None:
        """Reload if another handle published a newer manifest."""
        if mf.latest_generation(self.path) != self.manifest.generation:
            self.reload()

    def _load(self) -> None:
        manifest = mf.read_latest(self.path)
        attr_lines = self._read_lines(manifest, ATTRIBUTES_FILE)
        if not attr_lines:
            raise CorruptionError(f"{ATTRIBUTES_FILE} is empty")
        primary_key = tuple(json.loads(attr_lines[0])["primary_key"])
        attributes = [Attribute.from_dict(json.loads(line)) for line in attr_lines[1:]]

        metas: Dict[VersionId, VersionMeta] = {}
        for line in self._read_lines(manifest, METADATA_FILE):
            meta = VersionMeta.from_dict(json.loads(line))
            metas[meta.vid] = meta

        versioning: Dict[VersionId, Tuple[int, np.ndarray]] = {}
        for line in self._read_lines(manifest, VERSIONS_FILE):
            vid_s, pid_s, rids_s = (line.split("\t") + [""])[:3]
            rlist = np.array(rids_s.split(), dtype=np.int64)
            versioning[int(vid_s)] = (int(pid_s), rlist)

        children: Dict[VersionId, List[VersionId]] = {v: [] for v in metas}
        for vid, meta in metas.items():
            for p in meta.parents:
                if p not in children:
                    raise CorruptionError(f"v{vid} references missing parent v{p}")
                children[p].append(vid)
        for vid, meta in metas.items():
            meta.children = tuple(sorted(children[vid]))

        for vid, count in self._read_frequencies().items():
            if vid in metas:
                metas[vid].checkout_frequency = count

        if set(metas) != set(versioning):
            raise CorruptionError("metadata and versioning tables disagree on versions")

        self.manifest = manifest
        self.primary_key = primary_key
        self.attributes = attributes
        self.metas = metas
        self.versioning = versioning
        self._segments = {
            pid: cached
            for pid, cached in self._segments.items()
            if pid in manifest.segments and cached[0] == manifest.segments[pid].state
        }
        self._segment_rids = {}

    def _read_lines(self, manifest: mf.Manifest, name: str) -> List[str]:
        path = mf.resolve(self.path, manifest, name)
        data = mf.read_prefix(path, manifest.files.get(name, 0))
        return [line for line in data.decode("utf-8").split("\n") if line]

    def _read_frequencies(self) -> Dict[VersionId, int]:
        path = self.path / FREQUENCIES_FILE
        if not path.exists():
            return {}
        with open(path, "r") as f:
            return {int(k): int(v) for k, v in json.load(f).items()}

    # Read accessors --------------------------------------------------------

    @property
    def vids(self) -> List[VersionId]:
        return sorted(self.versioning)

    @property
    def next_vid(self) -> VersionId:
        return self.manifest.next_vid

    @property
    def next_rid(self) -> int:
        return self.manifest.next_rid

    @property
    def next_partition_id(self) -> int:
        return self.manifest.next_partition_id

    def attribute(self, attr_id: int) -> Attribute:
        return self.attributes[attr_id - 1]

    def meta(self, vid: VersionId) -> VersionMeta:
        if vid not in self.metas:
            raise NotFoundError(f"version v{vid} not found in '{self.name}'")
        return self.metas[vid]

    def version_attributes(self, vid: VersionId) -> List[Attribute]:
        return [self.attribute(a) for a in self.meta(vid).attributes]

    def partition_of(self, vid: VersionId) -> int:
        self.meta(vid)
        return self.versioning[vid][0]

    def rlist(self, vid: VersionId) -> np.ndarray:
        """Record ids of ``vid`` in insertion order."""
        self.meta(vid)
        return self.versioning[vid][1]

    def assignment(self) -> Dict[VersionId, int]:
        return {vid: pid for vid, (pid, _) in self.versioning.items()}

    def partitions(self) -> Dict[int, List[VersionId]]:
        groups: Dict[int, List[VersionId]] = {pid: [] for pid in self.manifest.segments}
        for vid, (pid, _) in sorted(self.versioning.items()):
            groups.setdefault(pid, []).append(vid)
        return groups

    def segment_rows(self, partition_id: int) -> int:
        """Live rows of a segment, the records a checkout of it reads."""
        return self._segment_info(partition_id).live_rows

    def storage_cost(self) -> int:
        """S: total live rows across all segments."""
        return sum(info.live_rows for info in self.manifest.segments.values())

    def segment_rids(self, partition_id: int) -> np.ndarray:
        """Sorted rids held by a segment (the union of its versions' rlists)."""
        if partition_id not in self._segment_rids:
            arrays = [r for vid, (pid, r) in self.versioning.items() if pid == partition_id]
            merged = np.unique(np.concatenate(arrays)) if arrays else np.empty(0, np.int64)
            self._segment_rids[partition_id] = merged
        return self._segment_rids[partition_id]

    def version_graph(self) -> VersionGraph:
        return build_version_graph(
            self.metas.values(), {vid: r for vid, (_, r) in self.versioning.items()}
        )

    def _segment_info(self, partition_id: int) -> mf.SegmentInfo:
        if partition_id not in self.manifest.segments:
            raise NotFoundError(f"partition {partition_id} not found in '{self.name}'")
        return self.manifest.segments[partition_id]

    def load_partition(self, partition_id: int) -> DataSegment:
        """Load a full segment; its ``cost`` is the number of records read."""
        info = self._segment_info(partition_id)
        cached = self._segments.get(partition_id)
        if cached and cached[0] == info.state:
            return cached[1]
        path = self.path / info.file
        try:
            data = mf.read_prefix(path, info.bytes)
        except FileNotFoundError:
            self.reload()
            info = self._segment_info(partition_id)
            try:
                data = mf.read_prefix(self.path / info.file, info.bytes)
            except FileNotFoundError:
                raise CorruptionError(f"segment {info.file} is missing")
        segment = decode_segment(data, self.attributes, frozenset(info.deleted))
        if segment.partition_id != partition_id or segment.stored_rows != info.rows:
            raise CorruptionError(f"segment {info.file} does not match the manifest")
        if segment.skipped != len(info.deleted):
            raise CorruptionError(f"segment {info.file} lacks rows the manifest deletes")
        self._segments[partition_id] = (info.state, segment)
        return segment

    # Locking ---------------------------------------------------------------

    @contextmanager
    def writer(self, blocking: bool = False) -> Iterator["CVDStore"]:
        """Hold the CVD writer lock; recovers the directory on first entry."""
        if self._lock_depth:
            self._lock_depth += 1
            try:
                yield self
            finally:
                self._lock_depth -= 1
            return

        fd = os.open(self.path / LOCK_FILE, os.O_RDWR | os.O_CREAT)
        try:
            fcntl.flock(fd, fcntl.LOCK_EX if blocking else fcntl.LOCK_EX | fcntl.LOCK_NB)
        except BlockingIOError:
            os.close(fd)
            raise StoreLockedError(f"CVD '{self.name}' is locked by another writer")
        self._lock_fd = fd
        self._lock_depth = 1
        try:
            if mf.needs_recovery(self.path, self.manifest):
                mf.recover(self.path, settings.store.keep_manifests)
                self.reload()
            yield self
        finally:
            self._lock_depth = 0
            self._lock_fd = None
            fcntl.flock(fd, fcntl.LOCK_UN)
            os.close(fd)

    def _require_writer(self) -> None:
        if not self._lock_depth:
            raise StoreLockedError("write attempted without holding the writer lock")

    # Writes ----------------------------------------------------------------

    def _append(self, name: str, data: bytes) -> None:
        with open(self.path / name, "ab") as f:
            f.write(data)
            f.flush()
            if self.fsync:
                os.fsync(f.fileno())

    def _grow_segment(
        self,
        nxt: mf.Manifest,
        pid: int,
        records: Sequence[Record],
        attributes: Sequence[Attribute],
    ) -> int:
        """Add ``records`` to a live segment in ``nxt``; returns rows written.

        A record whose rid the segment marks deleted still sits in the file
        with identical values, so it is restored by dropping the mark.
        """
        info = nxt.segments[pid]
        marked = set(info.deleted)
        restored = {r.rid for r in records if r.rid in marked}
        appended = [r for r in records if r.rid not in restored]
        body = encode_rows(appended, attributes)
        if body:
            self._append(info.file, body)
        nxt.segments[pid] = mf.SegmentInfo(
            info.file,
            info.bytes + len(body),
            info.rows + len(appended),
            sorted(marked - restored),
        )
        return len(records)

    def _publish(self, manifest: mf.Manifest) -> None:
        mf.publish(self.path, manifest, sync=self.fsync)
        stale = mf.list_manifests(self.path)[: -(settings.store.keep_manifests + 1)]
        for gen in stale:
            (self.path / f"MANIFEST-{gen:06d}.json").unlink(missing_ok=True)

    def append_commit(
        self,
        records_new: Sequence[Record],
        entry: Tuple[VersionId, int, Sequence[int]],
        meta: VersionMeta,
        new_attributes: Sequence[Attribute] = (),
    ) -> None:
        """Atomically persist one version.

        ``records_new`` are appended to the target segment: fresh records plus
        any existing records the segment does not yet hold. Either the
        segment rows, the versioning entry and the metadata row all become
        visible, or none does.
        """
        vid, pid, rlist_seq = entry
        rlist = np.asarray(rlist_seq, dtype=np.int64)
        with self.writer():
            self._validate_commit(records_new, vid, pid, rlist, meta, new_attributes)
            attributes = list(self.attributes) + list(new_attributes)
            nxt = self.manifest.successor()

            mf.failpoint("commit.begin")
            if new_attributes:
                lines = "".join(json.dumps(a.to_dict()) + "\n" for a in new_attributes)
                self._append(ATTRIBUTES_FILE, lines.encode("utf-8"))

            seg_name = segment_filename(pid)
            if pid in self.manifest.segments:
                self._grow_segment(nxt, pid, records_new, attributes)
            else:
                seg_bytes = encode_rows(records_new, attributes)
                header = encode_header(pid, [a.attr_id for a in attributes])
                with open(self.path / seg_name, "wb") as f:
                    f.write(header + seg_bytes)
                    f.flush()
                    if self.fsync:
                        os.fsync(f.fileno())
                nxt.segments[pid] = mf.SegmentInfo(
                    seg_name, len(header) + len(seg_bytes), len(records_new)
                )
            mf.failpoint("commit.segment")

            line = f"{vid}\t{pid}\t{' '.join(map(str, rlist.tolist()))}\n"
            self._append(VERSIONS_FILE, line.encode("utf-8"))
            mf.failpoint("commit.versioning")

            self._append(METADATA_FILE, (json.dumps(meta.to_dict()) + "\n").encode("utf-8"))
            mf.failpoint("commit.metadata")

            for name in (ATTRIBUTES_FILE, METADATA_FILE, VERSIONS_FILE):
                nxt.files[name] = (self.path / name).stat().st_size
            nxt.next_vid = vid + 1
            fresh = [r.rid for r in records_new if r.rid >= self.manifest.next_rid]
            if fresh:
                nxt.next_rid = max(fresh) + 1
            nxt.next_partition_id = max(nxt.next_partition_id, pid + 1)
            self._publish(nxt)
            mf.failpoint("commit.published")

            self._absorb_commit(nxt, records_new, vid, pid, rlist, meta, attributes)

    def _validate_commit(
        self,
        records_new: Sequence[Record],
        vid: VersionId,
        pid: int,
        rlist: np.ndarray,
        meta: VersionMeta,
        new_attributes: Sequence[Attribute],
    ) -> None:
        if vid in self.versioning or vid != self.manifest.next_vid:
            raise CorruptionError(f"version id v{vid} is not the next version id")
        if meta.vid != vid:
            raise CorruptionError("metadata row and versioning entry disagree on vid")
        for p in meta.parents:
            if p not in self.metas:
                raise NotFoundError(f"parent v{p} not found in '{self.name}'")
        expected = len(self.attributes) + 1
        for attr in new_attributes:
            if attr.attr_id != expected:
                raise SchemaError("new attributes must extend the pool densely")
            expected += 1
        if pid not in self.manifest.segments and pid < self.manifest.next_partition_id:
            raise CorruptionError(f"partition {pid} was retired and cannot be reused")

        appended = np.array([r.rid for r in records_new], dtype=np.int64)
        if np.unique(appended).size != appended.size:
            raise CorruptionError("rid collision inside the appended records")
        held = self.segment_rids(pid) if pid in self.manifest.segments else np.empty(0, np.int64)
        clash = np.intersect1d(appended, held)
        if clash.size:
            raise CorruptionError(f"rid collision: {clash[:5].tolist()} already in partition {pid}")
        if np.unique(rlist).size != rlist.size:
            raise CorruptionError(f"rlist of v{vid} contains duplicate rids")
        missing = np.setdiff1d(rlist, np.concatenate([held, appended]))
        if missing.size:
            raise CorruptionError(
                f"rlist of v{vid} references rids {missing[:5].tolist()} "
                f"absent from partition {pid}"
            )

    def _absorb_commit(
        self,
        manifest: mf.Manifest,
        records_new: Sequence[Record],
        vid: VersionId,
        pid: int,
        rlist: np.ndarray,
        meta: VersionMeta,
        attributes: List[Attribute],
    ) -> None:
        """Update in-memory state to match the just-published manifest."""
        self.manifest = manifest
        self.attributes = attributes
        meta.children = ()
        self.metas[vid] = meta
        for p in meta.parents:
            parent = self.metas[p]
            parent.children = tuple(sorted(parent.children + (vid,)))
        self.versioning[vid] = (pid, rlist)
        if pid in self._segment_rids:
            self._segment_rids[pid] = np.union1d(self._segment_rids[pid], rlist)
        cached = self._segments.pop(pid, None)
        info = manifest.segments[pid]
        # restored rows sit mid-file, so only a pure append extends the cache
        if cached is not None and cached[1].skipped == len(info.deleted):
            segment = cached[1]
            segment.records.extend(records_new)
            self._segments[pid] = (info.state, segment)

    def rewrite_partitions(
        self,
        appends: Mapping[int, Sequence[Record]],
        fresh: Mapping[int, Sequence[Record]],
        assignment: Mapping[VersionId, int],
        drop: Iterable[int],
        deletes: Optional[Mapping[int, Sequence[int]]] = None,
    ) -> int:
        """Atomically install a new partition layout; returns rows written.

        ``appends`` adds records to existing segments in place and
        ``deletes`` marks rids of existing segments deleted, one manifest
        entry each. ``fresh`` creates new segments (ids at or above
        ``next_partition_id``), ``assignment`` is the complete vid ->
        partition map and ``drop`` lists segments to remove.
        """
        deletes = deletes or {}
        with self.writer():
            drop = set(drop)
            self._validate_layout(appends, fresh, assignment, drop, deletes)
            nxt = self.manifest.successor()
            written = 0

            for pid, records in sorted(fresh.items()):
                header = encode_header(pid, [a.attr_id for a in self.attributes])
                body = encode_rows(records, self.attributes)
                with open(self.path / segment_filename(pid), "wb") as f:
                    f.write(header + body)
                    f.flush()
                    if self.fsync:
                        os.fsync(f.fileno())
                nxt.segments[pid] = mf.SegmentInfo(
                    segment_filename(pid), len(header) + len(body), len(records)
                )
                written += len(records)
                mf.failpoint("migrate.segment")

            for pid, records in sorted(appends.items()):
                if not records:
                    continue
                written += self._grow_segment(nxt, pid, records, self.attributes)
                mf.failpoint("migrate.append")

            for pid, rids in sorted(deletes.items()):
                if not len(rids):
                    continue
                info = nxt.segments[pid]
                marked = set(info.deleted) | {int(r) for r in rids}
                nxt.segments[pid] = mf.SegmentInfo(info.file, info.bytes, info.rows, sorted(marked))
                written += len(rids)

            tmp_name = f"{VERSIONS_FILE}.tmp-{nxt.generation}"
            lines = []
            for vid in sorted(self.versioning):
                rlist = self.versioning[vid][1]
                lines.append(f"{vid}\t{assignment[vid]}\t{' '.join(map(str, rlist.tolist()))}\n")
            data = "".join(lines).encode("utf-8")
            with open(self.path / tmp_name, "wb") as f:
                f.write(data)
                f.flush()
                if self.fsync:
                    os.fsync(f.fileno())
            mf.failpoint("migrate.versioning")

            nxt.files[VERSIONS_FILE] = len(data)
            nxt.pending_renames = {tmp_name: VERSIONS_FILE}
            for pid in sorted(drop):
                nxt.pending_deletes.append(nxt.segments.pop(pid).file)
            if fresh:
                nxt.next_partition_id = max(nxt.next_partition_id, max(fresh) + 1)
            self._publish(nxt)
            mf.failpoint("migrate.published")
            mf.apply_pending(self.path, nxt)
            self._segments = {p: c for p, c in self._segments.items() if p not in drop}
            self.reload()
            logger.info(
                f"Installed layout for '{self.name}': {len(self.manifest.segments)} partitions, "
                f"S={self.storage_cost()}, {written} rows written"
            )
            return written

    def _validate_layout(
        self,
        appends: Mapping[int, Sequence[Record]],
        fresh: Mapping[int, Sequence[Record]],
        assignment: Mapping[VersionId, int],
        drop: set,
        deletes: Mapping[int, Sequence[int]],
    ) -> None:
        if set(assignment) != set(self.versioning):
            raise ConsistencyError("new layout does not cover exactly the stored versions")
        for pid in fresh:
            if pid < self.manifest.next_partition_id:
                raise ConsistencyError(f"fresh partition id {pid} is already allocated")
        for pid in list(appends) + list(drop) + list(deletes):
            if pid not in self.manifest.segments:
                raise ConsistencyError(f"partition {pid} is not live")
        if (set(appends) | set(deletes)) & drop:
            raise ConsistencyError("a dropped partition cannot also be modified")
        live = (set(self.manifest.segments) - drop) | set(fresh)
        if set(assignment.values()) != live:
            raise ConsistencyError("every live partition must hold at least one version")

        contents: Dict[int, np.ndarray] = {}
        for pid in live:
            if pid in fresh:
                contents[pid] = np.array([r.rid for r in fresh[pid]], dtype=np.int64)
            else:
                extra = np.array([r.rid for r in appends.get(pid, ())], dtype=np.int64)
                removed = np.asarray(deletes.get(pid, ()), dtype=np.int64)
                held = self.segment_rids(pid)
                if np.setdiff1d(removed, held).size:
                    raise ConsistencyError(f"deletes from partition {pid} name records it lacks")
                held = np.setdiff1d(held, removed)
                if np.intersect1d(held, extra).size:
                    raise ConsistencyError(f"appends to partition {pid} duplicate held records")
                contents[pid] = np.concatenate([held, extra])
        for vid, pid in assignment.items():
            if np.setdiff1d(self.versioning[vid][1], contents[pid]).size:
                raise ConsistencyError(f"partition {pid} would not hold all records of v{vid}")

    # Advisory files --------------------------------------------------------

    def bump_frequencies(self, vids: Iterable[VersionId]) -> None:
        """Increment checkout frequencies; not part of the manifest."""
        with self.writer(blocking=True):
            counts = {vid: meta.checkout_frequency for vid, meta in self.metas.items()}
            for vid in vids:
                counts[vid] = counts.get(vid, 1) + 1
                self.metas[vid].checkout_frequency = counts[vid]
            self._write_json(FREQUENCIES_FILE, {str(k): v for k, v in sorted(counts.items())})

    def read_policy(self) -> Dict[str, Any]:
        path = self.path / POLICY_FILE
        if not path.exists():
            return {}
        with open(path, "r") as f:
            return json.load(f)

    def write_policy(self, policy: Dict[str, Any]) -> None:
        with self.writer(blocking=True):
            self._write_json(POLICY_FILE, policy)

    def _write_json(self, name: str, payload: Dict[str, Any]) -> None:
        tmp = self.path / f"{name}.tmp"
        with open(tmp, "w") as f:
            json.dump(payload, f, indent=2)
            f.flush()
            if self.fsync:
                os.fsync(f.fileno())
        os.replace(tmp, self.path / name)


def check_primary_key(
    records: Iterable[Record], key_ids: Sequence[int], context: str = ""
) -> None:
    """Raise ``ConstraintError`` when two records share primary-key values."""
    if not key_ids:
        return
    seen: Dict[Tuple[Any, ...], int] = {}
    for record in records:
        key = record.project(key_ids)
        if any(v is None for v in key):
            raise ConstraintError(f"{context}null primary key in record {record.rid}")
        if key in seen:
            raise ConstraintError(f"{context}duplicate primary key {key}")
        seen[key] = record.rid


def init_store(
    path: Path,
    attributes: Sequence[Attribute],
    primary_key: Sequence[str],
    rows: Sequence[Sequence[Any]] = (),
    message: str = "init",
    fsync: Optional[bool] = None,
) -> CVDStore:
    """Create a CVD whose root version v1 holds ``rows`` in a single partition."""
    ids = {a.name: a.attr_id for a in attributes}
    missing = [k for k in primary_key if k not in ids]
    if missing:
        raise SchemaError(f"primary key attributes {missing} are not in the schema")
    records = []
    for rid, row in enumerate(rows, start=1):
        if len(row) != len(attributes):
            raise SchemaError(f"row {rid} has {len(row)} values for {len(attributes)} attributes")
        values = [attr.dtype.coerce(raw) for attr, raw in zip(attributes, row)]
        while values and values[-1] is None:
            values.pop()
        records.append(Record(rid, tuple(values)))
    check_primary_key(records, [ids[k] for k in primary_key], context="init: ")

    store = CVDStore.create(path, attributes, primary_key, fsync=fsync)
    meta = VersionMeta(
        vid=1,
        message=message,
        attributes=tuple(a.attr_id for a in attributes),
    )
    store.append_commit(records, (1, store.next_partition_id, [r.rid for r in records]), meta)
    logger.info(f"Initialized '{store.name}' with v1 holding {len(records)} records")
    return store

"""
Numbered manifests and crash recovery.

A manifest ``MANIFEST-<generation>.json`` records the committed byte length
of every append-only file, the live segments, id counters, and any file
operations (renames, deletes) that must be rolled forward. Renaming a new
manifest into place is the commit point of every write.
"""

import json
import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Set, Tuple

from ..core.exceptions import CorruptionError, SimulatedCrash

logger = logging.getLogger(__name__)

MANIFEST_RE = re.compile(r"^MANIFEST-(\d{6,})\.json$")

# Files whose committed prefix is tracked by byte length
APPEND_FILES = ("attributes.json", "metadata.json", "versions.tsv")

_armed: Set[str] = set()


def arm_failpoint(name: str) -> None:
    """Make the next ``failpoint(name)`` raise ``SimulatedCrash``."""
    _armed.add(name)


def disarm_failpoints() -> None:
    _armed.clear()


def failpoint(name: str) -> None:
    if name in _armed:
        _armed.discard(name)
        raise SimulatedCrash(name)


@dataclass
class SegmentInfo:
    """A live segment; ``deleted`` rids stay in the file but are no longer read."""

    file: str
    bytes: int
    rows: int
    deleted: List[int] = field(default_factory=list)

    @property
    def live_rows(self) -> int:
        return self.rows - len(self.deleted)

    @property
    def state(self) -> Tuple[int, Tuple[int, ...]]:
        return (self.bytes, tuple(self.deleted))

    def to_dict(self) -> Dict[str, object]:
        data: Dict[str, object] = {"file": self.file, "bytes": self.bytes, "rows": self.rows}
        if self.deleted:
            data["deleted"] = list(self.deleted)
        return data


@dataclass
class Manifest:
    generation: int = 0
    next_rid: int = 1
    next_vid: int = 1
    next_partition_id: int = 1
    files: Dict[str, int] = field(default_factory=lambda: {f: 0 for f in APPEND_FILES})
    segments: Dict[int, SegmentInfo] = field(default_factory=dict)
    pending_renames: Dict[str, str] = field(default_factory=dict)
    pending_deletes: List[str] = field(default_factory=list)

    @property
    def filename(self) -> str:
        return f"MANIFEST-{self.generation:06d}.json"

    def to_dict(self) -> Dict[str, object]:
        return {
            "generation": self.generation,
            "next_rid": self.next_rid,
            "next_vid": self.next_vid,
            "next_partition_id": self.next_partition_id,
            "files": dict(self.files),
            "segments": {str(k): v.to_dict() for k, v in sorted(self.segments.items())},
            "pending_renames": dict(self.pending_renames),
            "pending_deletes": list(self.pending_deletes),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "Manifest":
        return cls(
            generation=int(data["generation"]),
            next_rid=int(data["next_rid"]),
            next_vid=int(data["next_vid"]),
            next_partition_id=int(data["next_partition_id"]),
            files={k: int(v) for k, v in data["files"].items()},
            segments={
                int(k): SegmentInfo(
                    v["file"],
                    int(v["bytes"]),
                    int(v["rows"]),
                    sorted(int(r) for r in v.get("deleted", ())),
                )
                for k, v in data["segments"].items()
            },
            pending_renames=dict(data.get("pending_renames", {})),
            pending_deletes=list(data.get("pending_deletes", [])),
        )

    def successor(self) -> "Manifest":
        """Copy with the next generation and no pending operations."""
        nxt = Manifest.from_dict(self.to_dict())
        nxt.generation = self.generation + 1
        nxt.pending_renames = {}
        nxt.pending_deletes = []
        return nxt


def fsync_file(path: Path) -> None:
    fd = os.open(path, os.O_RDONLY)
    try:
        os.fsync(fd)
    finally:
        os.close(fd)


def fsync_dir(path: Path) -> None:
    try:
        fsync_file(path)
    except OSError:
        # some filesystems refuse directory fsync
        pass


def list_manifests(directory: Path) -> List[int]:
    gens = []
    for entry in os.listdir(directory):
        m = MANIFEST_RE.match(entry)
        if m:
            gens.append(int(m.group(1)))
    return sorted(gens)


def read_latest(directory: Path) -> Manifest:
    gens = list_manifests(directory)
    if not gens:
        raise CorruptionError(f"no manifest in {directory}")
    path = directory / f"MANIFEST-{gens[-1]:06d}.json"
    try:
        with open(path, "r") as f:
            return Manifest.from_dict(json.load(f))
    except (ValueError, KeyError) as e:
        raise CorruptionError(f"unreadable manifest {path.name}: {e}")


def publish(directory: Path, manifest: Manifest, sync: bool = True) -> None:
    """Write ``manifest`` to a temp file and rename it into place."""
    tmp = directory / f"{manifest.filename}.tmp"
    with open(tmp, "w") as f:
        json.dump(manifest.to_dict(), f, indent=2)
        f.flush()
        if sync:
            os.fsync(f.fileno())
    failpoint("manifest.publish")
    os.replace(tmp, directory / manifest.filename)
    if sync:
        fsync_dir(directory)


def apply_pending(directory: Path, manifest: Manifest) -> None:
    """Roll forward renames and deletes recorded in ``manifest``."""
    for src, dst in manifest.pending_renames.items():
        if (directory / src).exists():
            os.replace(directory / src, directory / dst)
    for name in manifest.pending_deletes:
        path = directory / name
        if path.exists():
            path.unlink()


def recover(directory: Path, keep_manifests: int = 1) -> Manifest:
    """Bring the directory back to exactly the latest committed manifest.

    Must be called with the writer lock held.
    """
    manifest = read_latest(directory)
    apply_pending(directory, manifest)

    for name, length in manifest.files.items():
        _truncate(directory / name, length)
    live = {info.file for info in manifest.segments.values()}
    for pid, info in manifest.segments.items():
        _truncate(directory / info.file, info.bytes)

    for entry in os.listdir(directory):
        path = directory / entry
        if entry.endswith(".tmp") or ".tmp-" in entry:
            logger.info(f"Recovery: removing temporary file {entry}")
            path.unlink()
        elif entry.startswith("part_") and entry.endswith(".seg") and entry not in live:
            logger.info(f"Recovery: removing uncommitted segment {entry}")
            path.unlink()

    for gen in list_manifests(directory)[: -(keep_manifests + 1)]:
        (directory / f"MANIFEST-{gen:06d}.json").unlink()
    return manifest


def _truncate(path: Path, length: int) -> None:
    if not path.exists():
        if length:
            raise CorruptionError(f"{path.name} is missing")
        path.touch()
        return
    size = path.stat().st_size
    if size < length:
        raise CorruptionError(f"{path.name} is shorter ({size}) than committed ({length})")
    if size > length:
        logger.info(f"Recovery: truncating {path.name} from {size} to {length} bytes")
        with open(path, "r+b") as f:
            f.truncate(length)


def resolve(directory: Path, manifest: Manifest, name: str) -> Path:
    """Path holding the committed content of ``name``.

    Before a pending rename has been applied the content lives in its
    temporary source.
    """
    for src, dst in manifest.pending_renames.items():
        if dst == name and (directory / src).exists():
            return directory / src
    return directory / name


def read_prefix(path: Path, length: int) -> bytes:
    if length == 0:
        return b""
    with open(path, "rb") as f:
        data = f.read(length)
    if len(data) != length:
        raise CorruptionError(f"{path.name} is shorter than committed length {length}")
    return data


def latest_generation(directory: Path) -> Optional[int]:
    gens = list_manifests(directory)
    return gens[-1] if gens else None


def needs_recovery(directory: Path, manifest: Manifest) -> bool:
    """True when the directory holds anything beyond ``manifest``'s state."""
    if latest_generation(directory) != manifest.generation:
        return True
    if manifest.pending_renames or manifest.pending_deletes:
        return any((directory / src).exists() for src in manifest.pending_renames) or any(
            (directory / name).exists() for name in manifest.pending_deletes
        )
    for name, length in manifest.files.items():
        path = directory / name
        if not path.exists() or path.stat().st_size != length:
            return True
    for info in manifest.segments.values():
        path = directory / info.file
        if not path.exists() or path.stat().st_size != info.bytes:
            return True
    live = {info.file for info in manifest.segments.values()}
    for entry in os.listdir(directory):
        if entry.endswith(".tmp") or ".tmp-" in entry:
            return True
        if entry.startswith("part_") and entry.endswith(".seg") and entry not in live:
            return True
    return False

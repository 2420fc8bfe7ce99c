"""
Migration from the stored partitioning to a new scheme.

Each new partition P'_i is paired with at most one old partition P_j and
built by inserting R'_i minus R_j and marking R_j minus R'_i deleted.
Pairs are chosen greedily by an approximate cost derived from the version graph;
a partition whose exact cost exceeds |R'_i| is built from scratch.
"""

import heapq
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..core.exceptions import ConsistencyError
from ..core.types import Record
from ..core.version_graph import VersionGraph
from ..partition.scheme import PartitioningScheme
from ..storage.store import CVDStore

logger = logging.getLogger(__name__)


def modification_cost(new_records: np.ndarray, old_records: np.ndarray) -> int:
    """|R' \\ R| + |R \\ R'|."""
    return int(
        np.setdiff1d(new_records, old_records, assume_unique=True).size
        + np.setdiff1d(old_records, new_records, assume_unique=True).size
    )


@dataclass
class MigrationPair:
    """How one new partition is produced; ``source`` None means from scratch."""

    new_index: int
    source: Optional[int]
    inserts: np.ndarray
    deletes: np.ndarray

    @property
    def fresh(self) -> bool:
        return self.source is None

    @property
    def write_cost(self) -> int:
        return int(self.inserts.size + self.deletes.size)


@dataclass
class MigrationPlan:
    old_scheme: PartitioningScheme
    new_scheme: PartitioningScheme
    pairs: List[MigrationPair] = field(default_factory=list)
    records_written: Optional[int] = None

    @property
    def estimated_write_cost(self) -> int:
        return sum(p.write_cost for p in self.pairs)

    @property
    def naive_write_cost(self) -> int:
        """Records written by rebuilding every new partition from scratch."""
        return self.new_scheme.storage_cost()

    @property
    def fresh_count(self) -> int:
        return sum(1 for p in self.pairs if p.fresh)

    def summary(self) -> Dict[str, Optional[int]]:
        return {
            "partitions": len(self.pairs),
            "fresh": self.fresh_count,
            "estimated_write_cost": self.estimated_write_cost,
            "naive_write_cost": self.naive_write_cost,
            "records_written": self.records_written,
        }


def plan_migration(
    old: PartitioningScheme, new: PartitioningScheme, graph: VersionGraph
) -> MigrationPlan:
    """Greedy pairing of new partitions with old ones."""
    old_vids = set(old.assignment)
    new_vids = set(new.assignment)
    if not old_vids <= new_vids:
        raise ConsistencyError("the new scheme drops versions present in the old one")
    if new_vids != set(graph.vids):
        raise ConsistencyError("the new scheme does not cover the version graph")

    new_parts = new.partitions
    old_parts = {p.partition_id: p for p in old.partitions}
    heap = []
    for i, part in enumerate(new_parts):
        members = set(part.versions)
        for pid, old_part in old_parts.items():
            shared = [v for v in old_part.versions if v in members]
            if not shared:
                continue
            common = graph.count_records(shared)
            approx = part.n_records + old_part.n_records - 2 * common
            heapq.heappush(heap, (approx, -common, i, pid))

    pairs: Dict[int, MigrationPair] = {}
    used = set()
    record_sets: Dict[int, np.ndarray] = {}

    def new_records(i: int) -> np.ndarray:
        if i not in record_sets:
            record_sets[i] = graph.record_set(new_parts[i].versions)
        return record_sets[i]

    while heap:
        approx, _, i, pid = heapq.heappop(heap)
        if i in pairs or pid in used:
            continue
        target = new_records(i)
        held = graph.record_set(old_parts[pid].versions)
        inserts = np.setdiff1d(target, held, assume_unique=True)
        deletes = np.setdiff1d(held, target, assume_unique=True)
        if inserts.size + deletes.size > target.size:
            pairs[i] = MigrationPair(i, None, target, np.empty(0, np.int64))
            continue
        used.add(pid)
        pairs[i] = MigrationPair(i, pid, inserts, deletes)

    for i in range(len(new_parts)):
        if i not in pairs:
            pairs[i] = MigrationPair(i, None, new_records(i), np.empty(0, np.int64))

    plan = MigrationPlan(old, new, [pairs[i] for i in range(len(new_parts))])
    logger.info(
        f"Migration plan: {len(new_parts)} partitions ({plan.fresh_count} fresh), "
        f"writes {plan.estimated_write_cost} vs naive {plan.naive_write_cost}"
    )
    return plan


def _gather_records(store: CVDStore, rids: np.ndarray) -> Dict[int, Record]:
    """Load record values for ``rids`` from the stored segments."""
    needed = set(rids.tolist())
    found: Dict[int, Record] = {}
    for pid in sorted(store.manifest.segments):
        if not needed:
            break
        if not np.isin(store.segment_rids(pid), rids).any():
            continue
        for record in store.load_partition(pid).records:
            if record.rid in needed:
                found[record.rid] = record
                needed.discard(record.rid)
    if needed:
        raise ConsistencyError(f"records {sorted(needed)[:5]} are missing from the store")
    return found


def execute_migration(store: CVDStore, plan: MigrationPlan) -> Dict[int, int]:
    """Apply ``plan`` to ``store``; returns new partition index -> partition id.

    A paired partition keeps its segment: inserts are appended and deletes
    are marked in the manifest, so the rows written equal the plan's
    estimate. Fresh partitions get new segments and unused old segments are
    removed, all under one manifest switch. ``plan.records_written`` holds
    the rows actually written.
    """
    with store.writer():
        current = set(store.manifest.segments)
        sources = {p.source for p in plan.pairs if not p.fresh}
        if not sources <= current:
            raise ConsistencyError("migration plan references partitions not in the store")
        if set(plan.new_scheme.assignment) != set(store.vids):
            raise ConsistencyError("migration plan does not cover the stored versions")

        wanted = [p.inserts for p in plan.pairs]
        all_rids = np.unique(np.concatenate(wanted)) if wanted else np.empty(0, np.int64)
        records = _gather_records(store, all_rids)

        next_pid = store.next_partition_id
        mapping: Dict[int, int] = {}
        appends: Dict[int, List[Record]] = {}
        deletes: Dict[int, List[int]] = {}
        fresh: Dict[int, List[Record]] = {}
        for pair in plan.pairs:
            if pair.fresh:
                mapping[pair.new_index] = next_pid
                fresh[next_pid] = [records[r] for r in pair.inserts.tolist()]
                next_pid += 1
                continue
            mapping[pair.new_index] = pair.source
            appends[pair.source] = [records[r] for r in pair.inserts.tolist()]
            deletes[pair.source] = pair.deletes.tolist()

        assignment = {}
        for i, part in enumerate(plan.new_scheme.partitions):
            for vid in part.versions:
                assignment[vid] = mapping[i]
        drop = current - sources
        unchanged = (
            not fresh
            and not drop
            and plan.estimated_write_cost == 0
            and all(store.partition_of(vid) == pid for vid, pid in assignment.items())
        )
        if unchanged:
            plan.records_written = 0
            logger.info(f"Layout of '{store.name}' already matches the target scheme")
            return mapping
        plan.records_written = store.rewrite_partitions(
            appends, fresh, assignment, drop, deletes=deletes
        )
    logger.info(
        f"Migrated '{store.name}': {plan.records_written} record writes "
        f"(estimated {plan.estimated_write_cost}, naive {plan.naive_write_cost})"
    )
    return mapping

"""
Partitioning schemes and their cost model.

Storage cost S is the total number of records over all partitions;
checkout cost C_avg is the mean, over versions, of the record count of the
partition holding the version. The weighted checkout cost C_w averages
the same per-version cost with checkout frequencies as weights.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from ..core.exceptions import InvariantViolationError, ParameterError
from ..core.types import VersionId
from ..core.version_graph import VersionGraph

logger = logging.getLogger(__name__)

Edge = Tuple[VersionId, VersionId]


@dataclass(frozen=True)
class PartitionInfo:
    """One partition P_k = (V_k, R_k, E_k) reported as counts."""

    partition_id: int
    versions: Tuple[VersionId, ...]
    n_records: int
    n_edges: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "partition_id": self.partition_id,
            "versions": list(self.versions),
            "n_records": self.n_records,
            "n_edges": self.n_edges,
        }


@dataclass
class PartitioningScheme:
    """Disjoint grouping of versions into partitions."""

    partitions: List[PartitionInfo]
    assignment: Dict[VersionId, int]
    delta_used: Optional[float] = None
    recursion_levels: int = 0
    cut_edges: FrozenSet[Edge] = field(default_factory=frozenset)
    algorithm: str = "manual"

    @classmethod
    def from_groups(
        cls,
        graph: VersionGraph,
        groups: Iterable[Iterable[VersionId]],
        partition_ids: Optional[Sequence[int]] = None,
        **kwargs: Any,
    ) -> "PartitioningScheme":
        """Build a scheme with exact record counts from version groups.

        Partition ids default to 1..k ordered by each group's smallest vid.
        """
        normalized = [tuple(sorted(g)) for g in groups]
        normalized = [g for g in normalized if g]
        if partition_ids is None:
            normalized.sort()
            partition_ids = list(range(1, len(normalized) + 1))
        elif len(partition_ids) != len(normalized):
            raise ParameterError("one partition id is needed per non-empty group")
        partitions = []
        assignment: Dict[VersionId, int] = {}
        for pid, versions in zip(partition_ids, normalized):
            partitions.append(
                PartitionInfo(
                    partition_id=pid,
                    versions=versions,
                    n_records=graph.count_records(versions),
                    n_edges=sum(graph.record_count(v) for v in versions),
                )
            )
            for v in versions:
                assignment[v] = pid
        return cls(partitions, assignment, **kwargs)

    @classmethod
    def single_partition(cls, graph: VersionGraph) -> "PartitioningScheme":
        """Minimum storage: every version in one partition."""
        return cls.from_groups(graph, [graph.vids], algorithm="single")

    @classmethod
    def per_version(cls, graph: VersionGraph) -> "PartitioningScheme":
        """Minimum checkout cost: one partition per version."""
        return cls.from_groups(graph, [[v] for v in graph.vids], algorithm="per_version")

    # Costs -----------------------------------------------------------------

    @property
    def n_partitions(self) -> int:
        return len(self.partitions)

    @property
    def n_versions(self) -> int:
        return len(self.assignment)

    def storage_cost(self) -> int:
        return sum(p.n_records for p in self.partitions)

    def checkout_cost(self) -> float:
        if not self.assignment:
            return 0.0
        return sum(len(p.versions) * p.n_records for p in self.partitions) / self.n_versions

    def version_cost(self, vid: VersionId) -> int:
        """Records read to check out ``vid``."""
        return self.partition(self.assignment[vid]).n_records

    def partition(self, partition_id: int) -> PartitionInfo:
        for p in self.partitions:
            if p.partition_id == partition_id:
                return p
        raise KeyError(partition_id)

    def groups(self) -> List[FrozenSet[VersionId]]:
        return sorted((frozenset(p.versions) for p in self.partitions), key=min)

    def same_layout(self, other: "PartitioningScheme") -> bool:
        return set(self.groups()) == set(other.groups())

    def rebased(self, graph: VersionGraph) -> "PartitioningScheme":
        """Same groups with counts recomputed on ``graph`` (e.g. the DAG of a tree)."""
        return PartitioningScheme.from_groups(
            graph,
            [p.versions for p in self.partitions],
            partition_ids=[p.partition_id for p in self.partitions],
            delta_used=self.delta_used,
            recursion_levels=self.recursion_levels,
            cut_edges=self.cut_edges,
            algorithm=self.algorithm,
        )

    def validate(self, graph: VersionGraph) -> None:
        """Check the disjoint-cover and exact-count invariants against ``graph``."""
        seen: Dict[VersionId, int] = {}
        for p in self.partitions:
            if not p.versions:
                raise InvariantViolationError(f"partition {p.partition_id} is empty")
            for v in p.versions:
                if v in seen:
                    raise InvariantViolationError(
                        f"v{v} is in partitions {seen[v]} and {p.partition_id}"
                    )
                seen[v] = p.partition_id
            if p.n_records != graph.count_records(p.versions):
                raise InvariantViolationError(
                    f"partition {p.partition_id} reports {p.n_records} records"
                )
            if p.n_edges != sum(graph.record_count(v) for v in p.versions):
                raise InvariantViolationError(
                    f"partition {p.partition_id} reports {p.n_edges} edges"
                )
        if set(seen) != set(graph.vids):
            raise InvariantViolationError("scheme does not cover exactly the graph's versions")
        if seen != self.assignment:
            raise InvariantViolationError("assignment disagrees with partition membership")

    # Serialization ---------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "delta_used": self.delta_used,
            "recursion_levels": self.recursion_levels,
            "storage_cost": self.storage_cost(),
            "checkout_cost": self.checkout_cost(),
            "cut_edges": sorted([list(e) for e in self.cut_edges]),
            "partitions": [p.to_dict() for p in self.partitions],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class CostReport:
    """Storage S, average checkout C_avg and weighted checkout C_w."""

    storage: int
    checkout_avg: float
    checkout_weighted: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "storage": self.storage,
            "checkout_avg": self.checkout_avg,
            "checkout_weighted": self.checkout_weighted,
        }


def estimate_costs(
    scheme: PartitioningScheme,
    graph: VersionGraph,
    frequencies: Optional[Mapping[VersionId, float]] = None,
) -> CostReport:
    """Evaluate a scheme; frequencies default to uniform."""
    scheme.validate(graph)
    if frequencies is None:
        weighted = scheme.checkout_cost()
    else:
        sizes = {p.partition_id: p.n_records for p in scheme.partitions}
        total = 0.0
        mass = 0.0
        for vid, pid in scheme.assignment.items():
            f = float(frequencies.get(vid, 1))
            if f < 0:
                raise ParameterError(f"negative frequency for v{vid}")
            total += f * sizes[pid]
            mass += f
        weighted = total / mass if mass else 0.0
    return CostReport(
        storage=scheme.storage_cost(),
        checkout_avg=scheme.checkout_cost(),
        checkout_weighted=weighted,
    )


def scheme_from_store(store: Any, graph: Optional[VersionGraph] = None) -> PartitioningScheme:
    """Current physical layout of a store as a scheme with exact counts."""
    graph = graph or store.version_graph()
    layout = {pid: vids for pid, vids in store.partitions().items() if vids}
    pids = sorted(layout)
    return PartitioningScheme.from_groups(
        graph, [layout[p] for p in pids], partition_ids=pids, algorithm="stored"
    )

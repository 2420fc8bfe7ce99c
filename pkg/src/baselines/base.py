"""Shared configuration and helpers for the clustering baselines."""

import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import sparse

from ..config import settings
from ..core.exceptions import ParameterError, PartitionTimeout
from ..core.types import VersionId
from ..core.version_graph import VersionGraph

ALGORITHMS = ("agglo", "kmeans")


@dataclass
class BaselineConfig:
    """Knobs of the Agglo and KMeans partitioners.

    ``capacity`` is BC, the largest record count a partition may hold
    (None means unbounded). ``n_partitions`` is K for KMeans. ``tau``
    overrides the sampled common-shingle threshold.
    """

    algorithm: str = "agglo"
    capacity: Optional[int] = None
    n_partitions: Optional[int] = None
    iterations: int = field(default_factory=lambda: settings.baselines.iterations)
    shingle_count: int = field(default_factory=lambda: settings.baselines.shingle_count)
    candidate_window: int = field(default_factory=lambda: settings.baselines.candidate_window)
    tau_sample_pairs: int = field(default_factory=lambda: settings.baselines.tau_sample_pairs)
    tau: Optional[float] = None
    seed: int = field(default_factory=lambda: settings.baselines.seed)
    timeout: Optional[float] = None

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ParameterError(f"unknown baseline '{self.algorithm}'")
        if self.capacity is not None and self.capacity < 1:
            raise ParameterError("partition capacity BC must be positive")
        if self.n_partitions is not None and self.n_partitions < 1:
            raise ParameterError("K must be at least 1")
        if self.iterations < 0 or self.shingle_count < 1 or self.candidate_window < 1:
            raise ParameterError("iterations, shingle count and window must be positive")


class Deadline:
    """Raises ``PartitionTimeout`` once ``seconds`` have elapsed."""

    def __init__(self, seconds: Optional[float]):
        self.expires = time.monotonic() + seconds if seconds else None

    def check(self, what: str) -> None:
        if self.expires is not None and time.monotonic() > self.expires:
            raise PartitionTimeout(f"{what} exceeded its time limit")


def check_capacity(graph: VersionGraph, capacity: Optional[int]) -> int:
    """Effective BC; a capacity below the largest version is infeasible."""
    largest = max((graph.record_count(v) for v in graph.vids), default=0)
    if capacity is None:
        return max(graph.n_records, largest)
    if capacity < largest:
        raise ParameterError(
            f"capacity {capacity} is below the largest version ({largest} records)"
        )
    return capacity


def incidence_matrix(graph: VersionGraph) -> Tuple[List[VersionId], sparse.csr_matrix]:
    """Version × record membership matrix over compacted record columns."""
    vids = graph.vids
    universe = graph.record_set(vids)
    indptr = [0]
    cols = []
    for v in vids:
        idx = np.searchsorted(universe, graph.rlist(v))
        cols.append(idx)
        indptr.append(indptr[-1] + idx.size)
    indices = np.concatenate(cols) if cols else np.empty(0, dtype=np.int64)
    data = np.ones(indices.size, dtype=np.int32)
    matrix = sparse.csr_matrix(
        (data, indices, np.asarray(indptr)), shape=(len(vids), universe.size)
    )
    matrix.sort_indices()
    return vids, matrix

"""
KMeans baseline.

K random versions seed the centroids and every other version joins the
centroid it shares the most records with. Each round then recomputes every
centroid as the union of its members' records, reassigns all versions to
their nearest centroid, and moves single versions to whichever partition
lowers the total record count Σ|R_k| without exceeding the capacity BC.
The labelling with the smallest Σ|R_k| seen is returned.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np
from scipy import sparse

from ..core.exceptions import ParameterError
from ..core.version_graph import VersionGraph
from ..partition.scheme import PartitioningScheme
from .base import BaselineConfig, Deadline, check_capacity, incidence_matrix

logger = logging.getLogger(__name__)


class _Clusters:
    """Per-cluster record multiplicities for incremental Σ|R_k| updates."""

    def __init__(self, k: int, n_records: int, n_versions: int):
        dtype = np.min_scalar_type(max(n_versions, 1))
        self.mult = np.zeros((k, n_records), dtype=dtype)
        self.size = np.zeros(k, dtype=np.int64)
        self.count = np.zeros(k, dtype=np.int64)

    @property
    def storage(self) -> int:
        return int(self.size.sum())

    def added(self, k: int, cols: np.ndarray) -> int:
        return int(np.count_nonzero(self.mult[k, cols] == 0))

    def added_everywhere(self, cols: np.ndarray) -> np.ndarray:
        return np.count_nonzero(self.mult[:, cols] == 0, axis=1).astype(np.int64)

    def lost(self, k: int, cols: np.ndarray) -> int:
        return int(np.count_nonzero(self.mult[k, cols] == 1))

    def add(self, k: int, cols: np.ndarray) -> None:
        self.size[k] += self.added(k, cols)
        self.mult[k, cols] += 1
        self.count[k] += 1

    def remove(self, k: int, cols: np.ndarray) -> None:
        self.size[k] -= self.lost(k, cols)
        self.mult[k, cols] -= 1
        self.count[k] -= 1

    def centroids(self) -> sparse.csr_matrix:
        """Each centroid is the union of its members' records."""
        return sparse.csr_matrix((self.mult > 0).astype(np.int32))


def _rows(matrix: sparse.csr_matrix) -> List[np.ndarray]:
    return [matrix.indices[matrix.indptr[i] : matrix.indptr[i + 1]] for i in range(matrix.shape[0])]


def _assign(
    overlap: np.ndarray,
    rows: Sequence[np.ndarray],
    order: Sequence[int],
    clusters: _Clusters,
    labels: np.ndarray,
    capacity: int,
) -> None:
    """Place versions on their nearest centroid that still fits BC."""
    for i in order:
        # stable sort: ties go to the lower partition index
        ranked = np.argsort(-overlap[i], kind="stable")
        choice = None
        for k in ranked:
            if clusters.size[k] + clusters.added(k, rows[i]) <= capacity:
                choice = int(k)
                break
        if choice is None:
            choice = int(np.argmin(clusters.added_everywhere(rows[i])))
            logger.debug(f"kmeans: version row {i} fits no partition under BC; least growth wins")
        clusters.add(choice, rows[i])
        labels[i] = choice


def _repair_empty(
    overlap: np.ndarray, rows: Sequence[np.ndarray], clusters: _Clusters, labels: np.ndarray
) -> None:
    """Reseed each empty cluster with the version farthest from its centroid."""
    for c in np.flatnonzero(clusters.count == 0):
        movable = [i for i in range(len(labels)) if clusters.count[labels[i]] > 1]
        far = min(movable, key=lambda i: (overlap[i, labels[i]], i))
        clusters.remove(int(labels[far]), rows[far])
        clusters.add(int(c), rows[far])
        labels[far] = c


def _improve(
    rows: Sequence[np.ndarray], clusters: _Clusters, labels: np.ndarray, capacity: int
) -> int:
    """One pass of single-version moves that lower Σ|R_k|; returns the move count."""
    moves = 0
    for i in range(len(labels)):
        a = int(labels[i])
        if clusters.count[a] == 1:
            continue
        added = clusters.added_everywhere(rows[i])
        gain = clusters.lost(a, rows[i]) - added
        gain[clusters.size + added > capacity] = -1
        gain[a] = 0
        b = int(np.argmax(gain))
        if gain[b] > 0:
            clusters.remove(a, rows[i])
            clusters.add(b, rows[i])
            labels[i] = b
            moves += 1
    return moves


def kmeans(graph: VersionGraph, config: Optional[BaselineConfig] = None) -> PartitioningScheme:
    """KMeans partitioning into ``config.n_partitions`` groups."""
    config = config or BaselineConfig(algorithm="kmeans")
    deadline = Deadline(config.timeout)
    vids, matrix = incidence_matrix(graph)
    n = len(vids)
    k = config.n_partitions or 1
    if k > n:
        raise ParameterError(f"K={k} exceeds the number of versions ({n})")
    capacity = check_capacity(graph, config.capacity)
    rows = _rows(matrix)

    rng = np.random.default_rng(config.seed)
    seeds = rng.choice(n, size=k, replace=False)
    clusters = _Clusters(k, matrix.shape[1], n)
    labels = np.full(n, -1, dtype=np.int64)
    for c, i in enumerate(seeds):
        clusters.add(c, rows[i])
        labels[i] = c
    overlap = (matrix @ clusters.centroids().T).toarray()
    _assign(overlap, rows, [i for i in range(n) if labels[i] < 0], clusters, labels, capacity)
    best_labels, best_storage = labels.copy(), clusters.storage

    for round_no in range(1, config.iterations + 1):
        deadline.check("kmeans")
        overlap = (matrix @ clusters.centroids().T).toarray()
        clusters = _Clusters(k, matrix.shape[1], n)
        previous, labels = labels, np.full(n, -1, dtype=np.int64)
        _assign(overlap, rows, range(n), clusters, labels, capacity)
        _repair_empty(overlap, rows, clusters, labels)
        moves = _improve(rows, clusters, labels, capacity)
        changed = int(np.count_nonzero(labels != previous))
        logger.debug(
            f"kmeans round {round_no}: {changed} relabelled, {moves} moves, S={clusters.storage}"
        )
        if clusters.storage < best_storage:
            best_labels, best_storage = labels.copy(), clusters.storage
        if not changed:
            break

    groups: List[List[int]] = [[] for _ in range(k)]
    for i, c in enumerate(best_labels):
        groups[int(c)].append(vids[i])
    logger.info(f"kmeans: K={k}, S={best_storage}")
    return PartitioningScheme.from_groups(graph, groups, algorithm="kmeans")

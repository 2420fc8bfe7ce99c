"""
Agglomerative baseline.

Every version starts as its own partition. Partitions are ordered by their
min-hash shingles and, round after round, each partition merges with the
candidate among the next ``candidate_window`` partitions that shares the
most shingles, as long as the shared count exceeds τ and the merged
partition fits the capacity BC.
"""

import logging
from typing import List, Optional

import numpy as np
from scipy import sparse

from ..core.version_graph import VersionGraph
from ..partition.scheme import PartitioningScheme
from .base import BaselineConfig, Deadline, check_capacity, incidence_matrix

logger = logging.getLogger(__name__)

MERSENNE_PRIME = (1 << 31) - 1


def minhash_signatures(
    matrix: sparse.csr_matrix, shingle_count: int, rng: np.random.Generator
) -> np.ndarray:
    """One row of ``shingle_count`` min-hashes per matrix row.

    Hash ``k`` maps column ``r`` to ``(a_k·r + b_k) mod (2^31 − 1)``; empty
    rows get the prime itself in every slot.
    """
    a = rng.integers(1, MERSENNE_PRIME, size=shingle_count, dtype=np.int64)
    b = rng.integers(0, MERSENNE_PRIME, size=shingle_count, dtype=np.int64)
    sigs = np.full((matrix.shape[0], shingle_count), MERSENNE_PRIME, dtype=np.int64)
    for i in range(matrix.shape[0]):
        cols = matrix.indices[matrix.indptr[i] : matrix.indptr[i + 1]].astype(np.int64)
        if cols.size:
            sigs[i] = ((np.outer(cols, a) + b) % MERSENNE_PRIME).min(axis=0)
    return sigs


def sample_tau(sigs: np.ndarray, pairs: int, rng: np.random.Generator) -> float:
    """Median common-shingle count over uniformly sampled partition pairs.

    Capped at ``shingle_count - 1`` so identical signatures may still merge.
    """
    n, k = sigs.shape
    if n < 2 or pairs < 1:
        return 0.0
    left = rng.integers(n, size=pairs)
    right = rng.integers(n - 1, size=pairs)
    right += right >= left
    common = (sigs[left] == sigs[right]).sum(axis=1)
    return float(min(np.median(common), k - 1))


def _shingle_order(alive: List[int], sigs: np.ndarray) -> List[int]:
    keys = sigs[alive][:, ::-1].T
    return [alive[i] for i in np.lexsort(keys)]


def agglo(graph: VersionGraph, config: Optional[BaselineConfig] = None) -> PartitioningScheme:
    """Agglomerative partitioning under capacity ``config.capacity``."""
    config = config or BaselineConfig(algorithm="agglo")
    deadline = Deadline(config.timeout)
    capacity = check_capacity(graph, config.capacity)
    vids, matrix = incidence_matrix(graph)
    rng = np.random.default_rng(config.seed)
    sigs = minhash_signatures(matrix, config.shingle_count, rng)
    tau = config.tau if config.tau is not None else sample_tau(sigs, config.tau_sample_pairs, rng)

    n = len(vids)
    members = [[i] for i in range(n)]
    records = [matrix.indices[matrix.indptr[i] : matrix.indptr[i + 1]] for i in range(n)]
    alive = list(range(n))
    rounds = 0
    while len(alive) > 1:
        deadline.check("agglo")
        rounds += 1
        order = _shingle_order(alive, sigs)
        taken = set()
        absorbed = set()
        for pos, p in enumerate(order):
            if p in taken:
                continue
            window = [
                q for q in order[pos + 1 : pos + 1 + config.candidate_window] if q not in taken
            ]
            if not window:
                continue
            common = (sigs[window] == sigs[p]).sum(axis=1)
            for idx in np.argsort(-common, kind="stable"):
                if common[idx] <= tau:
                    break
                q = window[idx]
                union = np.union1d(records[p], records[q])
                if union.size > capacity:
                    continue
                records[p] = union
                members[p].extend(members[q])
                sigs[p] = np.minimum(sigs[p], sigs[q])
                taken.update((p, q))
                absorbed.add(q)
                break
        if not absorbed:
            break
        alive = [p for p in alive if p not in absorbed]
        logger.debug(f"agglo round {rounds}: {len(absorbed)} merges, {len(alive)} partitions")

    logger.info(f"agglo: {len(alive)} partitions after {rounds} rounds (BC={capacity}, tau={tau})")
    groups = [[vids[i] for i in members[p]] for p in alive]
    return PartitioningScheme.from_groups(graph, groups, algorithm="agglo")

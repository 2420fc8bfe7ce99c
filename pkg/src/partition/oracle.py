"""Exhaustive search over set partitions for tiny version graphs."""

import logging
from typing import List, Optional, Tuple

import numpy as np

from ..config import settings
from ..core.exceptions import InfeasibleBudgetError, ScaleError
from ..core.version_graph import VersionGraph
from .scheme import PartitioningScheme

logger = logging.getLogger(__name__)


def _record_masks(graph: VersionGraph) -> List[int]:
    universe = graph.record_set(graph.vids)
    masks = []
    for v in graph.vids:
        bits = np.zeros(universe.size, dtype=bool)
        bits[np.searchsorted(universe, graph.rlist(v))] = True
        packed = np.packbits(bits, bitorder="little").tobytes()
        masks.append(int.from_bytes(packed, "little"))
    return masks


def brute_force_optimal(
    graph: VersionGraph, gamma: float, max_versions: Optional[int] = None
) -> Tuple[PartitioningScheme, float]:
    """Minimum-C_avg scheme with S ≤ γ over every set partition of the versions.

    Ties on C_avg prefer the smaller storage cost.
    """
    limit = settings.partition.max_oracle_versions if max_versions is None else max_versions
    vids = graph.vids
    n = len(vids)
    if n > limit:
        raise ScaleError(f"exhaustive search supports at most {limit} versions, got {n}")
    if n == 0:
        raise InfeasibleBudgetError("no versions to partition")

    masks = _record_masks(graph)
    best: Optional[Tuple[int, int, List[int]]] = None
    labels = [0] * n
    unions: List[int] = []
    sizes: List[int] = []

    # restricted growth strings enumerate each set partition once
    def visit(i: int, storage: int) -> None:
        nonlocal best
        if storage > gamma:
            return
        if i == n:
            total = sum(size * union.bit_count() for size, union in zip(sizes, unions))
            cand = (total, storage, list(labels))
            if best is None or cand[:2] < best[:2]:
                best = cand
            return
        for k in range(len(unions)):
            before = unions[k]
            after = before | masks[i]
            unions[k] = after
            sizes[k] += 1
            labels[i] = k
            visit(i + 1, storage - before.bit_count() + after.bit_count())
            unions[k] = before
            sizes[k] -= 1
        unions.append(masks[i])
        sizes.append(1)
        labels[i] = len(unions) - 1
        visit(i + 1, storage + masks[i].bit_count())
        unions.pop()
        sizes.pop()

    visit(0, 0)
    if best is None:
        raise InfeasibleBudgetError(f"no partitioning fits storage budget {gamma}")

    groups: List[List[int]] = [[] for _ in range(max(best[2]) + 1)]
    for vid, label in zip(vids, best[2]):
        groups[label].append(vid)
    scheme = PartitioningScheme.from_groups(graph, groups, algorithm="oracle")
    return scheme, scheme.checkout_cost()

"""
LyreSplit under a weighted checkout cost.

Each version v is expanded into a chain of f_v copies sharing v's records
(chain edges weigh |R(v)|); the first copy of v hangs off the last copy of
v's parent with the original weight. LyreSplit runs on the expanded tree
and every version is then placed, among the partitions holding its
copies, in the one with the fewest records.
"""

import logging
import math
from functools import reduce
from typing import Dict, List, Mapping, Optional, Tuple

import networkx as nx

from ..config import settings
from ..core.exceptions import InfeasibleBudgetError, ParameterError
from ..core.types import VersionId
from ..core.version_graph import VersionGraph
from .lyresplit import TreeView, lyresplit
from .scheme import PartitioningScheme
from .search import bisect_delta

logger = logging.getLogger(__name__)


def normalize_frequencies(
    frequencies: Mapping[VersionId, int], vids: List[VersionId], cap: Optional[int] = None
) -> Dict[VersionId, int]:
    """Divide by the gcd and, if the total still exceeds ``cap``, rescale."""
    cap = settings.partition.max_weighted_copies if cap is None else cap
    freq: Dict[VersionId, int] = {}
    for vid in vids:
        f = frequencies.get(vid, 1)
        if int(f) != f or f <= 0:
            raise ParameterError(
                f"checkout frequency of v{vid} must be a positive integer, got {f}"
            )
        freq[vid] = int(f)
    g = reduce(math.gcd, freq.values())
    freq = {v: f // g for v, f in freq.items()}
    total = sum(freq.values())
    if total > cap:
        scale = cap / total
        freq = {v: max(1, int(f * scale)) for v, f in freq.items()}
        logger.warning(f"checkout frequencies rescaled by {scale:.3g} to bound the expansion")
    return freq


def expand_tree(
    tree: VersionGraph, freq: Mapping[VersionId, int]
) -> Tuple[VersionGraph, Dict[int, VersionId]]:
    """Build the copy-chain tree; returns it and a copy key -> vid map."""
    owner: Dict[int, VersionId] = {}
    first: Dict[VersionId, int] = {}
    last: Dict[VersionId, int] = {}
    key = 0
    for vid in tree.vids:
        first[vid] = key + 1
        for _ in range(freq[vid]):
            key += 1
            owner[key] = vid
        last[vid] = key

    dag = nx.DiGraph()
    rlists = {}
    for k, vid in owner.items():
        dag.add_node(
            k,
            records=tree.record_count(vid),
            attributes=tree.attributes(vid),
            frequency=1,
        )
        rlists[k] = tree.rlist(vid)
    for vid in tree.vids:
        for k in range(first[vid], last[vid]):
            dag.add_edge(k, k + 1, weight=tree.record_count(vid))
        for parent in tree.parents(vid):
            dag.add_edge(last[parent], first[vid], weight=tree.weight(parent, vid))
    for k in nx.topological_sort(dag):
        preds = list(dag.predecessors(k))
        dag.nodes[k]["level"] = 1 + max((dag.nodes[p]["level"] for p in preds), default=0)
    return VersionGraph(dag, rlists), owner


def _collapse(
    tree: VersionGraph, expanded: PartitioningScheme, owner: Mapping[int, VersionId]
) -> PartitioningScheme:
    """Place every version in its copies' smallest partition."""
    choice: Dict[VersionId, Tuple[int, int]] = {}
    for part in expanded.partitions:
        for k in part.versions:
            vid = owner[k]
            cand = (part.n_records, part.partition_id)
            if vid not in choice or cand < choice[vid]:
                choice[vid] = cand
    groups: Dict[int, List[VersionId]] = {}
    for vid, (_, pid) in choice.items():
        groups.setdefault(pid, []).append(vid)
    cut = frozenset(
        (owner[a], owner[b]) for a, b in expanded.cut_edges if owner[a] != owner[b]
    )
    return PartitioningScheme.from_groups(
        tree,
        groups.values(),
        delta_used=expanded.delta_used,
        recursion_levels=expanded.recursion_levels,
        cut_edges=cut,
        algorithm="weighted-lyresplit",
    )


def weighted_partition(
    tree: VersionGraph,
    frequencies: Mapping[VersionId, int],
    delta: Optional[float] = None,
    gamma: Optional[float] = None,
    picker: Optional[str] = None,
) -> PartitioningScheme:
    """LyreSplit minimizing the frequency-weighted checkout cost.

    Exactly one of ``delta`` (fixed threshold) or ``gamma`` (storage budget,
    bisected on δ) must be given.
    """
    if (delta is None) == (gamma is None):
        raise ParameterError("give exactly one of delta or gamma")
    picker = picker or settings.partition.picker
    freq = normalize_frequencies(frequencies, tree.vids)
    expanded, owner = expand_tree(tree, freq)
    view = TreeView(expanded)
    target = tree.source or tree

    def run(d: float) -> PartitioningScheme:
        scheme = _collapse(tree, lyresplit(expanded, d, picker=picker, view=view), owner)
        return scheme.rebased(target) if target is not tree else scheme

    if delta is not None:
        return run(delta)

    if gamma < target.n_records:
        raise InfeasibleBudgetError(f"storage budget {gamma} is below |R|={target.n_records}")
    n_records = expanded.n_records
    if n_records == 0:
        return PartitioningScheme.single_partition(target)
    lo = min(1.0, expanded.total_edges / (n_records * len(expanded)))
    floor = PartitioningScheme.from_groups(
        target, [target.vids], delta_used=lo, algorithm="weighted-lyresplit"
    )
    _, scheme = bisect_delta(run, lambda s: s.storage_cost(), lo, gamma, floor=floor)
    return scheme

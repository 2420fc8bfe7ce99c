"""Partition optimizer: cost model, LyreSplit and its variants."""

from .lyresplit import TreeView, lyresplit, pick_edge_cut, schema_aware_candidates
from .oracle import brute_force_optimal
from .scheme import (
    CostReport,
    PartitionInfo,
    PartitioningScheme,
    estimate_costs,
    scheme_from_store,
)
from .search import binary_search_delta, bisect_delta
from .weighted import expand_tree, normalize_frequencies, weighted_partition

__all__ = [
    "CostReport",
    "PartitionInfo",
    "PartitioningScheme",
    "TreeView",
    "binary_search_delta",
    "bisect_delta",
    "brute_force_optimal",
    "estimate_costs",
    "expand_tree",
    "lyresplit",
    "normalize_frequencies",
    "pick_edge_cut",
    "schema_aware_candidates",
    "scheme_from_store",
    "weighted_partition",
]

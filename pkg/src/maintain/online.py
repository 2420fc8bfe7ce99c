"""
Online partition assignment and divergence monitoring.

A new version v_i with heaviest parent v_j either joins v_j's partition or
opens a new one; it opens a new partition iff w(v_i, v_j) ≤ δ*|R| and the
current storage S is below γ. A periodic check re-runs the δ search and
flags a migration when the current checkout cost exceeds μ times the best.
"""

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from ..core.types import VersionId
from ..core.version_graph import VersionGraph, dag_to_tree
from ..partition.scheme import PartitioningScheme
from ..partition.search import binary_search_delta
from .policy import MaintenancePolicy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PartitionDecision:
    """``partition_id`` is None when a new partition must be opened."""

    partition_id: Optional[int]
    anchor: Optional[VersionId]
    weight: int

    @property
    def new_partition(self) -> bool:
        return self.partition_id is None


def assign_on_commit(
    vid: VersionId,
    parent_vids: Sequence[VersionId],
    weights: Mapping[VersionId, int],
    partition_of: Mapping[VersionId, int],
    n_records: int,
    storage: int,
    policy: MaintenancePolicy,
) -> PartitionDecision:
    """Apply the online rule for a freshly committed version."""
    if not parent_vids:
        return PartitionDecision(None, None, 0)
    anchor = min(parent_vids, key=lambda p: (-weights.get(p, 0), p))
    w = weights.get(anchor, 0)
    gamma = policy.budget(n_records)
    split = (
        policy.delta_star is not None
        and w <= policy.delta_star * n_records
        and storage < gamma
    )
    logger.debug(
        f"v{vid}: anchor v{anchor} w={w} |R|={n_records} S={storage} gamma={gamma} "
        f"delta*={policy.delta_star} -> {'new partition' if split else 'join'}"
    )
    if split:
        return PartitionDecision(None, anchor, w)
    return PartitionDecision(partition_of[anchor], anchor, w)


@dataclass
class CheckResult:
    migrate: bool
    current_cost: float
    best_cost: float
    delta: float
    gamma: float
    best_scheme: PartitioningScheme

    @property
    def ratio(self) -> float:
        return self.current_cost / self.best_cost if self.best_cost else 1.0


def maintenance_check(
    scheme: PartitioningScheme, graph: VersionGraph, policy: MaintenancePolicy
) -> CheckResult:
    """Compare the current checkout cost with LyreSplit's under γ."""
    tree, _ = dag_to_tree(graph)
    gamma = policy.budget(graph.n_records)
    delta, best = binary_search_delta(tree, gamma, picker=policy.picker)
    current = scheme.checkout_cost()
    best_cost = best.checkout_cost()
    migrate = current > policy.mu * best_cost
    logger.debug(
        f"maintenance check: C_avg={current:.2f} C*={best_cost:.2f} mu={policy.mu} "
        f"delta*={delta:.4g} -> {'migrate' if migrate else 'ok'}"
    )
    return CheckResult(migrate, current, best_cost, delta, gamma, best)

"""
Per-CVD partition maintenance: online assignment at commit, periodic
divergence checks and explicit optimization requests.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

from ..core.types import VersionId
from ..core.version_graph import dag_to_tree
from ..partition.lyresplit import lyresplit
from ..partition.scheme import scheme_from_store
from ..partition.search import binary_search_delta
from ..storage.store import CVDStore
from .migration import MigrationPlan, execute_migration, plan_migration
from .online import CheckResult, PartitionDecision, assign_on_commit, maintenance_check
from .policy import MaintenancePolicy, parse_gamma

logger = logging.getLogger(__name__)


@dataclass
class MaintenanceEvent:
    check: CheckResult
    plan: Optional[MigrationPlan] = None

    @property
    def migrated(self) -> bool:
        return self.plan is not None


@dataclass
class OptimizeResult:
    storage_before: int
    checkout_before: float
    storage_after: int
    checkout_after: float
    delta: float
    gamma: float
    plan: Optional[MigrationPlan]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "storage_before": self.storage_before,
            "checkout_before": self.checkout_before,
            "storage_after": self.storage_after,
            "checkout_after": self.checkout_after,
            "delta": self.delta,
            "gamma": self.gamma,
            "migration": self.plan.summary() if self.plan else None,
        }


class PartitionMaintainer:
    """Keeps one CVD's partitioning close to LyreSplit's."""

    def __init__(self, store: CVDStore, policy: Optional[MaintenancePolicy] = None):
        self.store = store
        self.policy = policy or self._load_policy()

    def _load_policy(self) -> MaintenancePolicy:
        data = self.store.read_policy()
        return MaintenancePolicy.from_dict(data) if data else MaintenancePolicy.from_settings()

    def save_policy(self) -> None:
        self.store.write_policy(self.policy.to_dict())

    @property
    def n_records(self) -> int:
        """|R|: rids are dense, so every assigned id is a live record."""
        return self.store.next_rid - 1

    def decide(
        self,
        vid: VersionId,
        parent_vids: Sequence[VersionId],
        weights: Mapping[VersionId, int],
    ) -> Tuple[int, PartitionDecision]:
        """Partition id for a new version (a fresh id when a partition opens)."""
        decision = assign_on_commit(
            vid,
            parent_vids,
            weights,
            self.store.assignment(),
            self.n_records,
            self.store.storage_cost(),
            self.policy,
        )
        if decision.new_partition:
            return self.store.next_partition_id, decision
        return decision.partition_id, decision

    def after_commit(self, vid: VersionId) -> Optional[MaintenanceEvent]:
        """Run the periodic check when the policy asks for it."""
        if not self.policy.enabled or vid % self.policy.check_every:
            return None
        return self.check_and_migrate()

    def check_and_migrate(self) -> MaintenanceEvent:
        graph = self.store.version_graph()
        current = scheme_from_store(self.store, graph)
        result = maintenance_check(current, graph, self.policy)
        self.policy.delta_star = result.delta
        plan = None
        if result.migrate:
            logger.info(
                f"'{self.store.name}': C_avg {result.current_cost:.1f} exceeds "
                f"{self.policy.mu} x {result.best_cost:.1f}; migrating"
            )
            plan = plan_migration(current, result.best_scheme, graph)
            execute_migration(self.store, plan)
        self.save_policy()
        return MaintenanceEvent(result, plan)

    def optimize(
        self,
        gamma: Optional[str] = None,
        mu: Optional[float] = None,
        delta: Optional[float] = None,
        check_every: Optional[int] = None,
    ) -> OptimizeResult:
        """Repartition now and enable periodic maintenance."""
        fields = self.policy.to_dict()
        if gamma is not None:
            fields["gamma"], fields["gamma_is_multiple"] = parse_gamma(gamma)
        if mu is not None:
            fields["mu"] = mu
        if check_every is not None:
            fields["check_every"] = check_every
        if delta is not None:
            fields["delta_star"] = delta
        fields["enabled"] = True
        self.policy = MaintenancePolicy.from_dict(fields)

        graph = self.store.version_graph()
        current = scheme_from_store(self.store, graph)
        tree, _ = dag_to_tree(graph)
        budget = self.policy.budget(graph.n_records)
        if delta is not None:
            target = lyresplit(tree, delta, picker=self.policy.picker)
            if tree is not graph:
                target = target.rebased(graph)
            chosen = delta
        else:
            chosen, target = binary_search_delta(tree, budget, picker=self.policy.picker)
        self.policy.delta_star = chosen

        plan = None
        if not target.same_layout(current):
            plan = plan_migration(current, target, graph)
            execute_migration(self.store, plan)
        self.save_policy()
        result = OptimizeResult(
            storage_before=current.storage_cost(),
            checkout_before=current.checkout_cost(),
            storage_after=target.storage_cost(),
            checkout_after=target.checkout_cost(),
            delta=chosen,
            gamma=budget,
            plan=plan,
        )
        logger.info(
            f"Optimized '{self.store.name}': S {result.storage_before} -> {result.storage_after}, "
            f"C_avg {result.checkout_before:.1f} -> {result.checkout_after:.1f} "
            f"(delta={chosen:.4g})"
        )
        return result

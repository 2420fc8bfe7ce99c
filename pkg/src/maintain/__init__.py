"""Online partition maintenance and migration."""

from .maintainer import MaintenanceEvent, OptimizeResult, PartitionMaintainer
from .migration import (
    MigrationPair,
    MigrationPlan,
    execute_migration,
    modification_cost,
    plan_migration,
)
from .online import CheckResult, PartitionDecision, assign_on_commit, maintenance_check
from .policy import MaintenancePolicy, parse_gamma

__all__ = [
    "CheckResult",
    "MaintenanceEvent",
    "MaintenancePolicy",
    "MigrationPair",
    "MigrationPlan",
    "OptimizeResult",
    "PartitionDecision",
    "PartitionMaintainer",
    "assign_on_commit",
    "execute_migration",
    "maintenance_check",
    "modification_cost",
    "parse_gamma",
    "plan_migration",
]

"""Workload generation, data-model comparison and partitioning experiments."""

from .experiments import (
    BenchPlan,
    ExperimentPoint,
    build_scheme,
    gamma_points,
    replay_maintenance,
    run_bench,
    run_partition_experiment,
)
from .models import MODELS, ModelCost, ModelCostReport, compare_models
from .workload import GeneratedWorkload, WorkloadConfig, generate_workload

__all__ = [
    "BenchPlan",
    "ExperimentPoint",
    "GeneratedWorkload",
    "MODELS",
    "ModelCost",
    "ModelCostReport",
    "WorkloadConfig",
    "build_scheme",
    "compare_models",
    "gamma_points",
    "generate_workload",
    "replay_maintenance",
    "run_bench",
    "run_partition_experiment",
]

"""
Experiment drivers: storage/checkout frontiers and maintenance replays.

Every frontier point partitions a private copy of the CVD, migrates the
copy to the scheme and measures the mean number of records read when
checking out a uniform sample of versions.
"""

import json
import logging
import shutil
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..baselines.agglo import agglo
from ..baselines.base import BaselineConfig
from ..baselines.kmeans import kmeans
from ..baselines.search import search_budget
from ..config import settings
from ..core.exceptions import ParameterError, PartitionTimeout
from ..core.types import VersionId
from ..core.version_graph import VersionGraph, dag_to_tree
from ..engine.engine import VersioningEngine, read_version
from ..maintain.migration import execute_migration, plan_migration
from ..maintain.policy import MaintenancePolicy
from ..partition.lyresplit import lyresplit
from ..partition.scheme import PartitioningScheme, scheme_from_store
from ..partition.search import binary_search_delta
from .workload import WorkloadConfig, generate_workload

logger = logging.getLogger(__name__)

ALGORITHMS = ("none", "lyresplit", "agglo", "kmeans")

FRONTIER_COLUMNS = [
    "algorithm",
    "gamma",
    "knob",
    "S",
    "C_avg",
    "wall_time_partitioner",
    "measured_checkout_record_reads",
    "timed_out",
]

REPLAY_COLUMNS = [
    "commit",
    "vid",
    "S",
    "C_avg",
    "C_avg_after",
    "C*_avg",
    "triggered",
    "intelligent_writes",
    "naive_writes",
]


@dataclass(frozen=True)
class ExperimentPoint:
    """One frontier point: a budget γ, or a fixed knob (δ, BC or K)."""

    algorithm: str
    gamma: Optional[float] = None
    knob: Optional[float] = None

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ParameterError(f"unknown algorithm '{self.algorithm}'")
        if self.algorithm != "none" and (self.gamma is None) == (self.knob is None):
            raise ParameterError("give exactly one of a budget or a knob value")


def gamma_points(
    algorithms: Sequence[str], multiples: Sequence[float], n_records: int
) -> List[ExperimentPoint]:
    """Budget points γ = m·|R| for every algorithm, plus the unpartitioned row."""
    points = [ExperimentPoint("none")]
    for algorithm in algorithms:
        if algorithm == "none":
            continue
        points.extend(ExperimentPoint(algorithm, gamma=m * n_records) for m in multiples)
    return points


def build_scheme(
    graph: VersionGraph, point: ExperimentPoint, timeout: Optional[float] = None
) -> Tuple[float, PartitioningScheme]:
    """Scheme for one point and the knob value it ended up using."""
    if point.algorithm == "none":
        return float("nan"), PartitioningScheme.single_partition(graph)
    if point.algorithm == "lyresplit":
        tree, _ = dag_to_tree(graph)
        if point.gamma is not None:
            return binary_search_delta(tree, point.gamma)
        scheme = lyresplit(tree, float(point.knob))
        return float(point.knob), scheme.rebased(graph) if tree is not graph else scheme

    config = BaselineConfig(algorithm=point.algorithm, timeout=timeout)
    if point.gamma is not None:
        knob, scheme = search_budget(graph, point.gamma, config)
        return float(knob), scheme
    if point.algorithm == "agglo":
        return float(point.knob), agglo(graph, replace(config, capacity=int(point.knob)))
    return float(point.knob), kmeans(graph, replace(config, n_partitions=int(point.knob)))


def measure_checkouts(
    engine: VersioningEngine, name: str, sample: Sequence[VersionId]
) -> float:
    """Mean records read to check out each sampled version."""
    store = engine.open(name)
    reads = [read_version(store, vid)[1] for vid in sample]
    return float(np.mean(reads)) if reads else 0.0


def _run_point(
    source: Path,
    name: str,
    point: ExperimentPoint,
    sample: List[int],
    timeout: Optional[float],
) -> Dict[str, Any]:
    row: Dict[str, Any] = {
        "algorithm": point.algorithm,
        "gamma": point.gamma if point.gamma is not None else float("nan"),
        "knob": float("nan"),
        "S": float("nan"),
        "C_avg": float("nan"),
        "wall_time_partitioner": float("nan"),
        "measured_checkout_record_reads": float("nan"),
        "timed_out": False,
    }
    with tempfile.TemporaryDirectory(prefix="cvd-bench-") as scratch:
        shutil.copytree(source, Path(scratch) / name)
        engine = VersioningEngine(Path(scratch))
        store = engine.open(name)
        graph = store.version_graph()
        started = time.perf_counter()
        try:
            knob, scheme = build_scheme(graph, point, timeout)
        except PartitionTimeout as exc:
            logger.warning(f"{point.algorithm} timed out: {exc}")
            row["wall_time_partitioner"] = time.perf_counter() - started
            row["timed_out"] = True
            return row
        row["wall_time_partitioner"] = time.perf_counter() - started
        row.update(knob=knob, S=scheme.storage_cost(), C_avg=scheme.checkout_cost())

        plan = plan_migration(scheme_from_store(store, graph), scheme, graph)
        execute_migration(store, plan)
        row["measured_checkout_record_reads"] = measure_checkouts(engine, name, sample)
    return row


def run_partition_experiment(
    engine: VersioningEngine,
    name: str,
    points: Sequence[ExperimentPoint],
    sample_versions: Optional[int] = None,
    timeout: Optional[float] = None,
    workers: Optional[int] = None,
    seed: int = 0,
) -> pd.DataFrame:
    """Frontier rows for ``points``, sorted by algorithm, budget and knob."""
    sample_versions = sample_versions or settings.bench.sample_versions
    timeout = settings.bench.timeout_seconds if timeout is None else timeout
    workers = workers or settings.bench.workers
    store = engine.open(name)
    vids = np.array(store.vids)
    rng = np.random.default_rng(seed)
    sample = rng.choice(vids, size=min(sample_versions, vids.size), replace=False).tolist()

    args = [(store.path, name, point, sample, timeout) for point in points]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_point, *zip(*args)))
    else:
        rows = [_run_point(*a) for a in args]

    frame = pd.DataFrame(rows, columns=FRONTIER_COLUMNS)
    return frame.sort_values(["algorithm", "gamma", "knob"], kind="mergesort").reset_index(
        drop=True
    )


def replay_maintenance(
    engine: VersioningEngine, config: WorkloadConfig, policy: MaintenancePolicy
) -> pd.DataFrame:
    """Commit a generated stream with online assignment and periodic checks.

    After each checked commit the current C_avg is compared with LyreSplit's
    best under γ and the CVD migrates when it exceeds μ times that.
    """
    policy = replace(policy, enabled=False)
    rows: List[Dict[str, Any]] = []

    def check(vid: VersionId) -> None:
        maintainer = engine.maintainer(config.name)
        if vid % maintainer.policy.check_every:
            return
        event = maintainer.check_and_migrate()
        rows.append(
            {
                "commit": vid - 1,
                "vid": vid,
                "S": maintainer.store.storage_cost(),
                "C_avg": event.check.current_cost,
                "C_avg_after": scheme_from_store(maintainer.store).checkout_cost(),
                "C*_avg": event.check.best_cost,
                "triggered": event.migrated,
                "intelligent_writes": event.plan.records_written if event.plan else 0,
                "naive_writes": event.plan.naive_write_cost if event.plan else 0,
            }
        )

    generate_workload(engine, config, on_commit=check, policy=policy)
    return pd.DataFrame(rows, columns=REPLAY_COLUMNS)


@dataclass
class BenchPlan:
    """Contents of a ``bench --config`` file."""

    workload: WorkloadConfig
    algorithms: List[str] = field(default_factory=lambda: ["lyresplit", "agglo", "kmeans"])
    gamma_multiples: List[float] = field(default_factory=lambda: [1.5, 2.0])
    replay: Optional[MaintenancePolicy] = None

    @classmethod
    def from_json(cls, path: Path) -> "BenchPlan":
        with open(path, "r") as f:
            data = json.load(f)
        if "workload" not in data:
            return cls(WorkloadConfig.from_dict(data))
        replay = data.get("replay")
        return cls(
            workload=WorkloadConfig.from_dict(data["workload"]),
            algorithms=list(data.get("algorithms", ["lyresplit", "agglo", "kmeans"])),
            gamma_multiples=[float(m) for m in data.get("gamma_multiples", [1.5, 2.0])],
            replay=MaintenancePolicy.from_dict(replay) if replay is not None else None,
        )


def run_bench(plan: BenchPlan, out: Path, workdir: Optional[Path] = None) -> pd.DataFrame:
    """Generate the workload in a scratch root, run the plan and write ``out``."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(prefix="cvd-bench-", dir=workdir) as scratch:
        engine = VersioningEngine(Path(scratch))
        if plan.replay is not None:
            frame = replay_maintenance(engine, plan.workload, plan.replay)
        else:
            generate_workload(engine, plan.workload, progress=True)
            n_records = engine.version_graph(plan.workload.name).n_records
            points = gamma_points(plan.algorithms, plan.gamma_multiples, n_records)
            frame = run_partition_experiment(engine, plan.workload.name, points)
    frame.to_csv(out, index=False)
    logger.info(f"Wrote {len(frame)} rows to {out}")
    return frame


__all__ = [
    "ALGORITHMS",
    "BenchPlan",
    "ExperimentPoint",
    "build_scheme",
    "gamma_points",
    "measure_checkouts",
    "replay_maintenance",
    "run_bench",
    "run_partition_experiment",
]

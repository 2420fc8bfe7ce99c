"""
Synthetic branching commit streams.

SCI workloads grow a mainline plus branches forked from random existing
versions, so the version graph is a tree. CUR workloads fork every
branch from a mainline version and merge it back into the mainline tip
when the branch ends, which creates merge nodes. Each commit replaces
``update_fraction`` of ``inserts`` parent records with edited copies,
adds the rest as new keys and deletes a few parent records.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from tqdm import tqdm

from ..core.exceptions import ParameterError
from ..core.types import DType, VersionId
from ..engine.engine import VersioningEngine
from ..maintain.maintainer import PartitionMaintainer
from ..maintain.policy import MaintenancePolicy

logger = logging.getLogger(__name__)

KINDS = ("SCI", "CUR")


@dataclass
class WorkloadConfig:
    """Shape of a generated workload; identical configs give identical streams."""

    kind: str = "SCI"
    branches: int = 10
    target_records: int = 10_000
    inserts: int = 100
    versions_per_branch: int = 10
    n_attrs: int = 100
    update_fraction: float = 0.7
    delete_fraction: float = 0.01
    seed: int = 0
    name: str = "bench"

    def __post_init__(self) -> None:
        self.kind = self.kind.upper()
        if self.kind not in KINDS:
            raise ParameterError(f"workload kind must be one of {KINDS}")
        if self.branches < 1 or self.inserts < 1 or self.versions_per_branch < 1:
            raise ParameterError("branches, inserts and versions per branch must be >= 1")
        if self.n_attrs < 1:
            raise ParameterError("a workload needs at least the key attribute")
        if not 0 <= self.update_fraction <= 1 or not 0 <= self.delete_fraction <= 1:
            raise ParameterError("update and delete fractions must lie in [0, 1]")

    @property
    def n_commits(self) -> int:
        return self.branches * self.versions_per_branch

    @property
    def root_records(self) -> int:
        return max(self.inserts, self.target_records - self.n_commits * self.inserts)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "WorkloadConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown workload settings: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: Path) -> "WorkloadConfig":
        with open(path, "r") as f:
            return cls.from_dict(json.load(f))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class GeneratedWorkload:
    name: str
    config: WorkloadConfig
    vids: List[VersionId] = field(default_factory=list)
    merges: List[VersionId] = field(default_factory=list)

    def summary(self, engine: VersioningEngine) -> Dict[str, int]:
        graph = engine.version_graph(self.name)
        return {
            "versions": len(graph),
            "records": graph.n_records,
            "edges": graph.total_edges,
            "merges": len(self.merges),
        }


class _Generator:
    """Tracks record values by rid so commits never re-read the store."""

    def __init__(self, engine: VersioningEngine, config: WorkloadConfig):
        self.engine = engine
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        capacity = config.root_records + config.n_commits * config.inserts + 1
        self.values = np.zeros((capacity, config.n_attrs), dtype=np.int64)
        self.next_key = 1

    def _fresh_rows(self, count: int) -> np.ndarray:
        rows = self.rng.integers(0, 1_000_000, size=(count, self.config.n_attrs))
        rows[:, 0] = np.arange(self.next_key, self.next_key + count)
        self.next_key += count
        return rows

    def _record(self, start_rid: int, rows: np.ndarray) -> None:
        self.values[start_rid : start_rid + len(rows)] = rows

    def create(self) -> VersionId:
        cfg = self.config
        schema = [("id", DType.INTEGER)] + [
            (f"a{i}", DType.INTEGER) for i in range(2, cfg.n_attrs + 1)
        ]
        rows = self._fresh_rows(cfg.root_records)
        self.engine.init(
            cfg.name, schema, primary_key=["id"], rows=rows.tolist(), message="root"
        )
        self._record(1, rows)
        return 1

    def commit(self, parent: VersionId, message: str) -> VersionId:
        cfg = self.config
        store = self.engine.open(cfg.name)
        parent_rids = store.rlist(parent)
        n_upd = min(int(round(cfg.inserts * cfg.update_fraction)), parent_rids.size)
        n_ins = cfg.inserts - n_upd
        n_del = int(self.rng.binomial(cfg.inserts, cfg.delete_fraction))
        n_del = min(n_del, parent_rids.size - n_upd)
        victims = self.rng.choice(parent_rids, size=n_upd + n_del, replace=False)
        updated = victims[:n_upd]

        edits = self.values[updated].copy()
        if cfg.n_attrs > 1 and n_upd:
            cols = self.rng.integers(1, cfg.n_attrs, size=n_upd)
            edits[np.arange(n_upd), cols] = self.rng.integers(0, 1_000_000, size=n_upd)
        else:
            # a key-only schema cannot edit in place; updates become inserts
            n_ins += n_upd
            edits = edits[:0]
        new_rows = np.concatenate([edits, self._fresh_rows(n_ins)])
        keep = np.setdiff1d(parent_rids, victims)

        start = store.next_rid
        vid = self.engine.commit_delta(cfg.name, [parent], keep, new_rows.tolist(), message)
        self._record(start, new_rows)
        return vid

    def merge(self, branch_tip: VersionId, main_tip: VersionId) -> VersionId:
        """Union of both tips; the branch wins key conflicts."""
        store = self.engine.open(self.config.name)
        mine, theirs = store.rlist(branch_tip), store.rlist(main_tip)
        extra = theirs[~np.isin(self.values[theirs, 0], self.values[mine, 0])]
        keep = np.concatenate([mine, extra])
        return self.engine.commit_delta(
            self.config.name, [branch_tip, main_tip], keep, [], f"merge v{branch_tip}"
        )


def generate_workload(
    engine: VersioningEngine,
    config: WorkloadConfig,
    on_commit: Optional[Callable[[VersionId], None]] = None,
    policy: Optional[MaintenancePolicy] = None,
    progress: bool = False,
) -> GeneratedWorkload:
    """Create ``config.name`` under the engine root and replay the stream into it.

    ``on_commit`` runs after every committed version, merges included.
    ``policy`` is stored on the new CVD before the first branch commit.
    """
    gen = _Generator(engine, config)
    result = GeneratedWorkload(config.name, config)
    root = gen.create()
    if policy is not None:
        PartitionMaintainer(engine.open(config.name), policy).save_policy()
    result.vids.append(root)
    mainline: List[VersionId] = [root]
    every: List[VersionId] = [root]

    def record(vid: VersionId) -> None:
        result.vids.append(vid)
        every.append(vid)
        if on_commit is not None:
            on_commit(vid)

    bar = tqdm(
        total=config.n_commits, desc=f"{config.kind} {config.name}", disable=not progress
    )
    for branch in range(config.branches):
        if branch == 0:
            tip = root
        elif config.kind == "SCI":
            tip = every[int(gen.rng.integers(len(every)))]
        else:
            tip = mainline[int(gen.rng.integers(len(mainline)))]
        for step in range(config.versions_per_branch):
            tip = gen.commit(tip, f"branch {branch} step {step}")
            record(tip)
            if branch == 0:
                mainline.append(tip)
            bar.update(1)
        if config.kind == "CUR" and branch > 0:
            merged = gen.merge(tip, mainline[-1])
            result.merges.append(merged)
            mainline.append(merged)
            record(merged)
    bar.close()
    logger.info(
        f"Generated {config.kind} workload '{config.name}': {len(result.vids)} versions, "
        f"{len(result.merges)} merges"
    )
    return result
